"""Run configuration shared by every CLI subcommand.

A config file is a JSON object whose keys mirror :class:`RunConfig`; command
line flags override file values. ``to_dict`` is the canonical echo written
into every output header (``threads`` is deliberately absent: outputs must
not depend on it).
"""
from dataclasses import asdict, dataclass, field, fields, replace
import json
import os

from .corpus import ENTITY_TYPES
from .counts import DENOMINATORS
from .errors import ConfigError
from .estimator import UNSEEN_POLICIES
from .featsel import POLICIES
from .synth import SyntheticConfig
from .tune import DEFAULT_LAMBDAS, DEFAULT_SUBSET_SIZES

PATH_KEYS = ("train", "valid", "test", "model", "mask", "tune_report", "report",
             "curve", "ranked", "bench_report", "out_dir")
DEFAULT_SPLITS = {"train": 10000, "valid": 1000, "test": 1000}


@dataclass(frozen=True)
class RunConfig:
    N: int = 10
    entity_type: str = "PER"
    denominator: str = "complement"
    policy: str = "CET"
    size: object = None          # int, or "P%" of the smallest per-position vocabulary
    seed: int = None
    lam: float = None
    lambdas: tuple = DEFAULT_LAMBDAS
    subset_sizes: tuple = DEFAULT_SUBSET_SIZES
    cutoff: int = 8000
    max_rank: int = None
    runs: int = 10
    unseen: str = "ignore"
    distinct: bool = True
    paths: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        object.__setattr__(self, "subset_sizes", tuple(int(x) for x in self.subset_sizes))
        object.__setattr__(self, "paths", dict(self.paths))
        object.__setattr__(self, "synth", dict(self.synth))
        if self.size is not None:
            kind, v = parse_size(self.size)
            object.__setattr__(self, "size", v if kind == "abs" else str(self.size).strip())
        if self.lam is not None:
            object.__setattr__(self, "lam", float(self.lam))
        self.validate()

    def validate(self):
        if not isinstance(self.N, int) or self.N < 1:
            raise ConfigError("N must be a positive integer")
        if self.entity_type not in ENTITY_TYPES:
            raise ConfigError(f"entity_type must be one of {ENTITY_TYPES}")
        if self.denominator not in DENOMINATORS:
            raise ConfigError(f"denominator must be one of {DENOMINATORS}")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}")
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigError("seed must be a non-negative integer")
        if self.lam is not None and not float(self.lam) >= 0:
            raise ConfigError("lam must be >= 0")
        if not self.lambdas or list(self.lambdas) != sorted(self.lambdas) \
                or self.lambdas[0] < 0:
            raise ConfigError("lambdas must be non-empty, ascending and >= 0")
        if list(self.subset_sizes) != sorted(self.subset_sizes) \
                or any(s < 0 for s in self.subset_sizes):
            raise ConfigError("subset_sizes must be ascending and >= 0")
        if self.cutoff < 1:
            raise ConfigError("cutoff must be >= 1")
        if self.max_rank is not None and self.max_rank < 1:
            raise ConfigError("max_rank must be >= 1")
        if self.runs < 0:
            raise ConfigError("runs must be >= 0")
        if self.unseen not in UNSEEN_POLICIES:
            raise ConfigError(f"unseen must be one of {UNSEEN_POLICIES}")
        unknown = set(self.paths) - set(PATH_KEYS)
        if unknown:
            raise ConfigError(f"unknown path keys: {sorted(unknown)}")
        unknown = set(self.synth) - {"config", "splits"}
        if unknown:
            raise ConfigError(f"unknown synth keys: {sorted(unknown)}")

    def path(self, key, required=True):
        p = self.paths.get(key)
        if p is None and required:
            raise ConfigError(f"path {key!r} is not configured (--{key.replace('_', '-')})")
        return p

    def input_path(self, key):
        p = self.path(key)
        if not os.path.isfile(p):
            raise ConfigError(f"{key} file {p!r} does not exist")
        return p

    def synthetic_config(self):
        return SyntheticConfig.from_dict(self.synth.get("config", {}))

    def splits(self):
        splits = dict(DEFAULT_SPLITS)
        splits.update(self.synth.get("splits", {}))
        if set(splits) != set(DEFAULT_SPLITS) or any(
                not isinstance(v, int) or v < 0 for v in splits.values()):
            raise ConfigError("synth.splits needs non-negative train/valid/test counts")
        return splits

    def to_dict(self):
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        d["subset_sizes"] = list(self.subset_sizes)
        return d

    def echo(self):
        """Canonical single-line JSON form embedded in output headers."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def with_paths(self, **paths):
        return replace(self, paths={**self.paths, **paths})

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def parse_size(size):
    """``("abs", n)`` for an integer size, ``("frac", f)`` for ``"P%"``."""
    if isinstance(size, bool):
        raise ConfigError("size must be an integer or a percentage")
    if isinstance(size, int):
        if size < 0:
            raise ConfigError("size must be >= 0")
        return "abs", size
    if isinstance(size, str):
        s = size.strip()
        try:
            if s.endswith("%"):
                f = float(s[:-1]) / 100.0
                if not 0 <= f <= 1:
                    raise ValueError
                return "frac", f
            return parse_size(int(s))
        except ValueError:
            pass
    raise ConfigError(f"invalid size {size!r}: use an integer or a percentage like '10%'")


def resolve_size(size, model):
    """Concrete per-position size; percentages refer to min_k |V_k|."""
    if size is None:
        raise ConfigError("size is not configured (--size)")
    kind, v = parse_size(size)
    if kind == "abs":
        return v
    return int(v * int(model.vocab_sizes().min()))


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    return RunConfig.from_dict(data)


def merge_overrides(config, overrides, paths):
    """Apply flag values (``None`` means "not given") on top of ``config``."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    new_paths = {**config.paths, **{k: v for k, v in paths.items() if v is not None}}
    try:
        return replace(config, paths=new_paths, **changes)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
