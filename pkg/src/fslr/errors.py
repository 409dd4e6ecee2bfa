"""Exception hierarchy shared by the library and the CLI."""


class FslrError(Exception):
    """Base class for all errors raised by this package."""


class CorpusParseError(FslrError, ValueError):
    """Malformed tagged-corpus input."""

    def __init__(self, message, lineno=None, source=None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class FormatError(FslrError, ValueError):
    """A model, mask or report file is truncated, corrupt or of the wrong version."""


class ConfigError(FslrError, ValueError):
    """Invalid or inconsistent run configuration."""


class InvariantError(FslrError, AssertionError):
    """A data-structure invariant does not hold."""


class CountOverflowError(InvariantError, OverflowError):
    """A frequency count exceeded the 64-bit unsigned range."""


class UndefinedRatio(FslrError, ArithmeticError):
    """The ratio has a zero denominator and a positive numerator.

    Raised instead of returning ``inf`` so callers must decide how to
    treat "infinite evidence" explicitly.
    """
