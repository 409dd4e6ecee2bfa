"""Seeded synthetic tagged corpora with planted entity-context triggers.

Background tokens follow a finite Zipf law. Entities are dropped in at random
slots; a trigger ``(token, entity_type, offset, rate, lift)`` appears
``offset`` tokens to the left of an entity of ``entity_type`` with
probability ``rate`` and anywhere else with probability ``rate / lift``.
With ``offset = 1`` the trigger sits at window position ``k = N``.
"""
from dataclasses import asdict, dataclass, field
import re

import numpy as np

from .corpus import ENTITY_TYPES, TaggedDocument
from .errors import ConfigError

_NAME_STEM = {"PER": "Name", "LOC": "Place", "ORG": "Org", "MISC": "Misc"}
_RESERVED = re.compile(r"^(w\d+|h\d+_\d+|(Name|Place|Org|Misc)\d+)$")


@dataclass(frozen=True)
class Trigger:
    token: str
    entity_type: str = "PER"
    offset: int = 1
    rate: float = 0.3
    lift: float = 50.0


@dataclass(frozen=True)
class SyntheticConfig:
    n_docs: int = 1000
    doc_length: int = 120
    vocab_size: int = 20000
    zipf_exponent: float = 1.05
    entity_rate: float = 0.04
    entity_types: dict = field(default_factory=lambda: {"PER": 0.5, "LOC": 0.5})
    entity_vocab_size: int = 2000
    entity_max_len: int = 3
    triggers: tuple = ()
    noise_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "triggers", tuple(
            t if isinstance(t, Trigger) else Trigger(**t) for t in self.triggers))
        object.__setattr__(self, "entity_types", dict(self.entity_types))
        self.validate()

    def validate(self):
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be >= 1")
        if self.entity_vocab_size < 1:
            raise ConfigError("entity_vocab_size must be >= 1")
        if self.n_docs < 0 or self.doc_length < 0:
            raise ConfigError("n_docs and doc_length must be >= 0")
        if self.entity_max_len < 1:
            raise ConfigError("entity_max_len must be >= 1")
        if not 0.0 <= self.entity_rate <= 1.0:
            raise ConfigError("entity_rate must lie in [0, 1]")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError("noise_rate must lie in [0, 1]")
        if not self.entity_types or any(w < 0 for w in self.entity_types.values()) \
                or sum(self.entity_types.values()) <= 0:
            raise ConfigError("entity_types needs positive weights")
        for t in self.entity_types:
            if t not in ENTITY_TYPES:
                raise ConfigError(f"unknown entity type {t!r}")
        slots = {}
        for trig in self.triggers:
            if not trig.token or trig.token.split() != [trig.token] \
                    or _RESERVED.match(trig.token) or trig.token.startswith("<"):
                raise ConfigError(f"invalid trigger token {trig.token!r}")
            if trig.entity_type not in self.entity_types:
                raise ConfigError(f"trigger {trig.token!r}: entity type "
                                  f"{trig.entity_type!r} is never generated")
            if trig.offset < 1:
                raise ConfigError("trigger offset must be >= 1")
            if not 0.0 <= trig.rate <= 1.0 or trig.lift <= 0:
                raise ConfigError(f"trigger {trig.token!r}: bad rate/lift")
            key = (trig.entity_type, trig.offset)
            slots[key] = slots.get(key, 0.0) + trig.rate
            if slots[key] > 1.0 + 1e-12:
                raise ConfigError(f"trigger rates at {key} sum above 1")

    def to_dict(self):
        d = asdict(self)
        d["triggers"] = [asdict(t) for t in self.triggers]
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synthetic config keys: {sorted(unknown)}")
        return cls(**d)


def _zipf_cdf(size, exponent):
    w = 1.0 / np.arange(1, size + 1, dtype=np.float64) ** exponent
    cdf = np.cumsum(w)
    return cdf / cdf[-1]


def generate_synthetic_corpus(config, seed):
    """Generate ``config.n_docs`` documents, deterministic in ``seed``."""
    config.validate()
    rng = np.random.default_rng(seed)
    cdf = _zipf_cdf(config.vocab_size, config.zipf_exponent)
    types = sorted(config.entity_types)
    tweights = np.array([config.entity_types[t] for t in types], dtype=np.float64)
    tweights /= tweights.sum()
    by_slot = {}
    for trig in config.triggers:
        by_slot.setdefault((trig.entity_type, trig.offset), []).append(trig)
    offsets_for = {t: sorted({d for (et, d) in by_slot if et == t}) for t in types}
    gap = max([trig.offset for trig in config.triggers], default=1)

    docs = []
    for doc_id in range(config.n_docs):
        docs.append(_generate_document(config, rng, cdf, types, tweights, by_slot,
                                       offsets_for, gap, doc_id))
    return docs


def _generate_document(config, rng, cdf, types, tweights, by_slot, offsets_for,
                       gap, doc_id):
    L = config.doc_length
    ranks = np.searchsorted(cdf, rng.random(L), side="right")
    tokens = [f"w{r}" for r in ranks.tolist()]
    free = np.ones(L, dtype=bool)  # slots available for background draws

    spans = []
    next_ok = 0
    for start in np.flatnonzero(rng.random(L) < config.entity_rate).tolist():
        if start < next_ok:
            continue
        length = int(rng.integers(1, config.entity_max_len + 1))
        end = min(start + length, L)
        etype = types[int(rng.choice(len(types), p=tweights))]
        stem = _NAME_STEM[etype]
        for i in range(start, end):
            tokens[i] = f"{stem}{int(rng.integers(config.entity_vocab_size))}"
        free[start:end] = False
        for d in offsets_for[etype]:
            if start - d >= 0:
                free[start - d] = False
        spans.append((start, end, etype))
        next_ok = end + gap

    # Background draws only land on free slots, so scale the per-slot rate to
    # keep the expected count at rate / lift over every non-entity-context slot.
    for trig in config.triggers:
        u = rng.random(L)
        n_free = int(free.sum())
        if n_free == 0:
            continue
        slots = {s - trig.offset for s, _, t in spans
                 if t == trig.entity_type and s - trig.offset >= 0}
        p = min(1.0, trig.rate / trig.lift * (L - len(slots)) / n_free)
        hits = np.flatnonzero(free & (u < p))
        for i in hits.tolist():
            tokens[i] = trig.token
        free[hits] = False

    for start, _, etype in spans:
        for d in offsets_for[etype]:
            if start - d < 0:
                continue
            u = rng.random()
            acc = 0.0
            for trig in by_slot[(etype, d)]:
                acc += trig.rate
                if u < acc:
                    tokens[start - d] = trig.token
                    break

    if config.noise_rate > 0:
        tag = int(rng.integers(2 ** 62))
        noisy = np.flatnonzero(free & (rng.random(L) < config.noise_rate))
        for i in noisy.tolist():
            if tokens[i].startswith("w"):
                tokens[i] = f"h{tag}_{i}"
    return TaggedDocument(tuple(tokens), tuple(spans), doc_id)


STANDARD_TRIGGERS = (
    Trigger("mr", "PER", 1, 0.30, 50.0),
    Trigger("ms", "PER", 1, 0.10, 40.0),
    Trigger("president", "PER", 1, 0.08, 20.0),
    Trigger("dr", "PER", 1, 0.05, 30.0),
    Trigger("said", "PER", 2, 0.15, 8.0),
    Trigger("chief", "PER", 3, 0.10, 10.0),
    Trigger("in", "LOC", 1, 0.40, 4.0),
    Trigger("at", "LOC", 1, 0.15, 5.0),
    Trigger("near", "LOC", 1, 0.05, 20.0),
)


def standard_config(n_docs=10000):
    """The planted-trigger corpus used by the acceptance suite (train size)."""
    return SyntheticConfig(n_docs=n_docs, triggers=STANDARD_TRIGGERS)


def split_seeds(master_seed, n=3):
    """Independent child seeds for train/valid/test splits."""
    children = np.random.SeedSequence(master_seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]
