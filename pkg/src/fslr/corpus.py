"""Tagged corpora, N-gram windows and their integer-encoded batch form.

Corpus files hold one document per line. Tokens are separated by whitespace
and entity spans are marked with standalone ``<TYPE>`` / ``</TYPE>`` tokens::

    met <PER> John Smith </PER> today

Lines starting with ``#`` are header/comment lines and are skipped.

A window of order N for slot ``i`` is the N tokens ``doc[i-N:i]``. Position
``k = 1`` is its leftmost token and ``k = N`` the token adjacent to slot ``i``.
The window is labelled as an entity context when an entity of the requested
type starts at ``i``.
"""
from dataclasses import dataclass, field
import re

import numpy as np

from .errors import CorpusParseError

ENTITY_TYPES = ("LOC", "PER", "ORG", "MISC")

_TAG = re.compile(r"^<(/?)([A-Za-z]+)>$")


def tokenize(line):
    """Split ``line`` on runs of whitespace; no other normalisation is applied."""
    return line.split()


@dataclass(frozen=True)
class TaggedDocument:
    tokens: tuple
    entity_spans: tuple = ()
    doc_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "entity_spans",
                           tuple(tuple(s) for s in self.entity_spans))
        prev_end = 0
        for start, end, etype in self.entity_spans:
            if not 0 <= start < end <= len(self.tokens):
                raise ValueError(f"span ({start}, {end}) out of bounds")
            if start < prev_end:
                raise ValueError("entity spans overlap or are unsorted")
            if etype not in ENTITY_TYPES:
                raise ValueError(f"unknown entity type {etype!r}")
            prev_end = end

    def __len__(self):
        return len(self.tokens)

    def entity_starts(self, entity_type):
        return [s for s, _, t in self.entity_spans if t == entity_type]


@dataclass(frozen=True)
class LabeledWindow:
    """N tokens plus whether the slot right after them starts an entity."""

    tokens: tuple
    is_ne: bool
    doc_id: int = 0
    offset: int = 0  # index of the slot following the window

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def order(self):
        return len(self.tokens)


def parse_line(line, lineno=None, doc_id=0, source=None):
    tokens = []
    spans = []
    open_type = None
    open_start = 0
    for tok in tokenize(line):
        m = _TAG.match(tok)
        if m is None:
            tokens.append(tok)
            continue
        closing, etype = m.group(1) == "/", m.group(2)
        if etype not in ENTITY_TYPES:
            if etype.isupper():
                raise CorpusParseError(f"unknown entity type {etype!r}",
                                       lineno, source)
            tokens.append(tok)  # e.g. "<br>": not a tag
            continue
        if not closing:
            if open_type is not None:
                raise CorpusParseError(
                    f"nested tag <{etype}> inside <{open_type}>", lineno, source)
            open_type, open_start = etype, len(tokens)
        else:
            if open_type is None:
                raise CorpusParseError(f"closing </{etype}> without opening tag",
                                       lineno, source)
            if etype != open_type:
                raise CorpusParseError(
                    f"</{etype}> closes <{open_type}>", lineno, source)
            if len(tokens) == open_start:
                raise CorpusParseError(f"empty <{etype}> span", lineno, source)
            spans.append((open_start, len(tokens), etype))
            open_type = None
    if open_type is not None:
        raise CorpusParseError(f"unclosed tag <{open_type}>", lineno, source)
    return TaggedDocument(tuple(tokens), tuple(spans), doc_id)


def parse_tagged(stream, source=None):
    """Parse a tagged corpus.

    ``stream`` may be a string or an iterable of lines (e.g. an open file).
    Returns one :class:`TaggedDocument` per non-header line, numbered from 0.
    """
    if isinstance(stream, str):
        stream = stream.splitlines()
    docs = []
    for lineno, line in enumerate(stream, start=1):
        if line.startswith("#"):
            continue
        docs.append(parse_line(line, lineno, len(docs), source))
    return docs


def read_corpus(path):
    with open(path, encoding="utf-8") as fh:
        return parse_tagged(fh, source=str(path))


def format_document(doc):
    out = []
    spans = iter(doc.entity_spans)
    span = next(spans, None)
    for i, tok in enumerate(doc.tokens):
        if span is not None and i == span[0]:
            out.append(f"<{span[2]}>")
        out.append(tok)
        if span is not None and i == span[1] - 1:
            out.append(f"</{span[2]}>")
            span = next(spans, None)
    return " ".join(out)


def extract_windows(doc, N, entity_type):
    """All order-``N`` windows of ``doc`` labelled for ``entity_type``.

    Windows that would start before the document are skipped, so a document
    of length L yields ``max(0, L - N)`` windows.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    starts = set(doc.entity_starts(entity_type))
    toks = doc.tokens
    return [LabeledWindow(toks[i - N:i], i in starts, doc.doc_id, i)
            for i in range(N, len(toks))]


@dataclass(frozen=True, eq=False)
class WindowBatch:
    """Integer-encoded windows.

    ``ids[w, k - 1]`` indexes ``vocab`` (sorted, so id order is token order).
    ``labels`` is True for entity-context windows.
    """

    vocab: tuple
    ids: np.ndarray
    labels: np.ndarray
    doc_ids: np.ndarray = field(default=None)
    offsets: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.ids.shape[0]
        if self.doc_ids is None:
            object.__setattr__(self, "doc_ids", np.zeros(n, dtype=np.int64))
        if self.offsets is None:
            object.__setattr__(self, "offsets", np.zeros(n, dtype=np.int64))

    @property
    def order(self):
        return self.ids.shape[1]

    def __len__(self):
        return self.ids.shape[0]

    def windows(self):
        vocab = self.vocab
        for row, lab, d, o in zip(self.ids.tolist(), self.labels.tolist(),
                                  self.doc_ids.tolist(), self.offsets.tolist()):
            yield LabeledWindow(tuple(vocab[t] for t in row), lab, d, o)

    def ngram(self, w):
        return tuple(self.vocab[t] for t in self.ids[w])

    @classmethod
    def from_windows(cls, windows):
        windows = list(windows)
        if not windows:
            raise ValueError("no windows")
        N = windows[0].order
        if any(w.order != N for w in windows):
            raise ValueError("windows of mixed order")
        index = {}
        raw = np.empty((len(windows), N), dtype=np.int64)
        for r, w in enumerate(windows):
            raw[r] = [index.setdefault(t, len(index)) for t in w.tokens]
        vocab, remap = _sorted_vocab(index)
        return cls(vocab, remap[raw],
                   np.array([w.is_ne for w in windows], dtype=bool),
                   np.array([w.doc_id for w in windows], dtype=np.int64),
                   np.array([w.offset for w in windows], dtype=np.int64))

    @classmethod
    def from_documents(cls, docs, N, entity_type):
        """Encode every window of ``docs`` in one pass over the tokens.

        Equivalent to ``from_windows`` over :func:`extract_windows`, but each
        token is interned once rather than once per window it appears in.
        """
        if N < 1:
            raise ValueError("N must be >= 1")
        index = {}
        chunks, labels, doc_ids, offsets = [], [], [], []
        for doc in docs:
            L = len(doc.tokens)
            if L <= N:
                continue
            enc = np.fromiter((index.setdefault(t, len(index)) for t in doc.tokens),
                              dtype=np.int64, count=L)
            win = np.lib.stride_tricks.sliding_window_view(enc, N)[:L - N]
            chunks.append(win)
            lab = np.zeros(L - N, dtype=bool)
            for s in doc.entity_starts(entity_type):
                if s >= N:
                    lab[s - N] = True
            labels.append(lab)
            doc_ids.append(np.full(L - N, doc.doc_id, dtype=np.int64))
            offsets.append(np.arange(N, L, dtype=np.int64))
        if not chunks:
            return cls((), np.empty((0, N), dtype=np.int64),
                       np.empty(0, dtype=bool))
        vocab, remap = _sorted_vocab(index)
        return cls(vocab, remap[np.concatenate(chunks)], np.concatenate(labels),
                   np.concatenate(doc_ids), np.concatenate(offsets))


def _sorted_vocab(index):
    """Sorted vocabulary and the array mapping insertion ids to sorted ids."""
    tokens = list(index)
    order = sorted(range(len(tokens)), key=tokens.__getitem__)
    remap = np.empty(len(tokens), dtype=np.int64)
    remap[order] = np.arange(len(tokens), dtype=np.int64)
    return tuple(tokens[i] for i in order), remap
