"""Filter-style feature selection over (position, token) entries.

Scores read a 2x2 contingency table per entry: ``a`` / ``b`` are the
token's counts in the entity-context (``c``) and complement (``c-bar``)
classes, ``a_bar`` / ``b_bar`` the counts of windows without the token.
Probabilities are cell / n.
"""
from dataclasses import dataclass
import hashlib
import json

import numpy as np

from .counts import FORMAT_VERSION, _parse_header, _parse_meta
from .errors import ConfigError, FormatError

POLICIES = ("Random", "TF", "CET", "Chi2", "GSS")
MASK_MAGIC = "#fslr-mask"


@dataclass(frozen=True)
class ScorePolicy:
    kind: str
    seed: int = None

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ConfigError(f"unknown score policy {self.kind!r}; "
                              f"expected one of {POLICIES}")
        if self.kind == "Random" and self.seed is None:
            raise ConfigError("the Random policy requires a seed")


# ---- score functions ------------------------------------------------------

def _cells(a, b, a_bar, b_bar):
    cells = [np.asarray(x, dtype=np.int64) for x in (a, b, a_bar, b_bar)]
    if any(np.any(c < 0) for c in cells):
        raise ValueError("contingency cells must be non-negative")
    n = cells[0] + cells[1] + cells[2] + cells[3]
    if np.any(n <= 0):
        raise ValueError("contingency table is empty")
    if np.any(n > 3_000_000_000):
        raise ValueError("table too large for exact int64 cross products")
    return cells + [n]


def _log1p_minus_x(x):
    """``log1p(x) - x`` without cancellation near zero."""
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) < 0.01
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.log1p(x) - x
    xs = np.where(small, x, 0.0)
    series = np.zeros_like(xs)
    term = xs * xs
    for j in range(2, 14):
        series += (-term / j) if j % 2 == 0 else (term / j)
        term = term * xs
    return np.where(small, series, direct)


def cet_scores(a, b, a_bar, b_bar):
    """Expected cross entropy for text (natural log), vectorized.

    Each term ``p(t, c) log[p(t, c) / (p(t) p(c))]`` is written as
    ``p(t, c) log1p(delta)`` with ``delta`` an exact integer ratio; the
    first-order parts of the two terms are summed in closed form.
    """
    a, b, a_bar, b_bar, n = _cells(a, b, a_bar, b_bar)
    det = a * b_bar - b * a_bar
    df = det.astype(np.float64)
    t = (a + b).astype(np.float64)
    n_c = (a + a_bar).astype(np.float64)
    n_cbar = (b + b_bar).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = df / (t * n_c)
        d2 = -df / (t * n_cbar)
        first = np.where(det != 0, (df / t) * (df / (n_c * n_cbar)), 0.0)
        g1 = np.where(a > 0, a * _log1p_minus_x(np.where(a > 0, d1, 0.0)), 0.0)
        g2 = np.where(b > 0, b * _log1p_minus_x(np.where(b > 0, d2, 0.0)), 0.0)
    out = (first + g1 + g2) / n
    return np.where(det == 0, 0.0, out)


def chi2_scores(a, b, a_bar, b_bar):
    """Chi-square with joint-cell products in the denominator, vectorized.

    ``+inf`` when the denominator vanishes but the numerator does not.
    """
    a, b, a_bar, b_bar, n = _cells(a, b, a_bar, b_bar)
    det = (a * b_bar - b * a_bar).astype(np.float64)
    # p-scaling cancels: (det / n^2)^2 / (a b a_bar b_bar / n^4)
    den = (a.astype(np.float64) * b) * (a_bar.astype(np.float64) * b_bar)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (det * det) / den
    return np.where(det == 0, 0.0, np.where(den == 0, np.inf, out))


def gss_scores(a, b, a_bar, b_bar):
    a, b, a_bar, b_bar, n = _cells(a, b, a_bar, b_bar)
    nf = n.astype(np.float64)
    return (a * b_bar - b * a_bar).astype(np.float64) / (nf * nf)


def _scalar(fn, ct):
    return float(fn(ct.a, ct.b, ct.a_bar, ct.b_bar))


def score_cet(ct):
    return _scalar(cet_scores, ct)


def score_chi2(ct):
    return _scalar(chi2_scores, ct)


def score_gss(ct):
    return _scalar(gss_scores, ct)


def score_tf(model, k, token):
    f_de, f_nu = model.get(k, token)
    return float(f_de + f_nu)


_CONTINGENCY_SCORES = {"CET": cet_scores, "Chi2": chi2_scores, "GSS": gss_scores}


def entry_scores(model, policy):
    """Score of every model entry (aligned with ``model.token_ids``)."""
    f_de = model.f_de.astype(np.int64)
    f_nu = model.f_nu.astype(np.int64)
    if policy.kind == "TF":
        return (f_de + f_nu).astype(np.float64)
    if policy.kind == "Random":
        out = np.empty(model.entry_count, dtype=np.float64)
        for k in range(1, model.N + 1):
            lo, hi = model.span(k)
            rng = np.random.default_rng([policy.seed, k])
            out[lo:hi] = rng.random(hi - lo)
        return out
    fn = _CONTINGENCY_SCORES[policy.kind]
    return fn(f_nu, f_de, model.n_nu - f_nu, model.n_de - f_de)


# ---- masks ---------------------------------------------------------------

class FeatureMask:
    """Per-position selected tokens, in selection order, with their scores."""

    def __init__(self, N, policy, size, model_fingerprint, selected, scores,
                 meta=None):
        self.N = int(N)
        self.policy = policy
        self.size = int(size)
        self.model_fingerprint = model_fingerprint
        self.selected = tuple(tuple(s) for s in selected)
        self.scores = tuple(tuple(float(x) for x in s) for s in scores)
        self.meta = dict(meta or {})
        if len(self.selected) != self.N or len(self.scores) != self.N:
            raise ValueError("mask must list every position")
        for sel, sc in zip(self.selected, self.scores):
            if len(sel) != len(sc) or len(sel) > self.size:
                raise ValueError("mask position larger than its size or "
                                 "scores misaligned")
            if len(set(sel)) != len(sel):
                raise ValueError("duplicate token in mask position")
        self._sets = None

    def sets(self):
        if self._sets is None:
            self._sets = tuple(frozenset(s) for s in self.selected)
        return self._sets

    def contains(self, k, token):
        return token in self.sets()[k - 1]

    def weight(self, k, token):
        return 1 if self.contains(k, token) else 0

    @property
    def entry_count(self):
        return sum(len(s) for s in self.selected)

    def __eq__(self, other):
        if not isinstance(other, FeatureMask):
            return NotImplemented
        return (self.N, self.policy, self.size, self.model_fingerprint,
                self.selected, self.scores, self.meta) == \
            (other.N, other.policy, other.size, other.model_fingerprint,
             other.selected, other.scores, other.meta)

    def fingerprint(self):
        return hashlib.sha256(self.to_bytes()).hexdigest()[:16]

    def to_bytes(self):
        seed = "" if self.policy.seed is None else str(self.policy.seed)
        lines = [f"{MASK_MAGIC}\tformat_version={FORMAT_VERSION}\tN={self.N}\t"
                 f"policy={self.policy.kind}\tsize={self.size}\tseed={seed}\t"
                 f"model={self.model_fingerprint}\tentries={self.entry_count}\n",
                 "#meta\t" + json.dumps(self.meta, sort_keys=True,
                                        separators=(",", ":")) + "\n"]
        for k, (sel, sc) in enumerate(zip(self.selected, self.scores), start=1):
            lines.extend(f"{k}\t{t}\t{s!r}\n" for t, s in zip(sel, sc))
        return "".join(lines).encode("utf-8")

    @classmethod
    def from_bytes(cls, data):
        if not data:
            raise FormatError("empty mask file")
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"mask file is not UTF-8: {exc}") from None
        if not text.endswith("\n"):
            raise FormatError("mask file truncated (no final newline)")
        lines = text.split("\n")[:-1]
        head = _parse_header(lines[0], MASK_MAGIC)
        try:
            N, size, entries = int(head["N"]), int(head["size"]), int(head["entries"])
            seed = int(head["seed"]) if head["seed"] else None
            policy = ScorePolicy(head["policy"], seed)
            fingerprint = head["model"]
        except (KeyError, ValueError):
            raise FormatError("mask header incomplete") from None
        if len(lines) < 2 or not lines[1].startswith("#meta\t"):
            raise FormatError("mask file lacks #meta line")
        meta = _parse_meta(lines[1])
        body = lines[2:]
        if len(body) != entries:
            raise FormatError(f"mask file truncated: {len(body)} of {entries} rows")
        selected = [[] for _ in range(N)]
        scores = [[] for _ in range(N)]
        last = 1
        for r, line in enumerate(body):
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"mask row {r + 3}: expected 3 fields")
            try:
                k = int(parts[0])
                s = float(parts[2])
            except ValueError:
                raise FormatError(f"mask row {r + 3}: bad number") from None
            if not last <= k <= N or s != s:
                raise FormatError(f"mask row {r + 3}: bad position or NaN score")
            last = k
            selected[k - 1].append(parts[1])
            scores[k - 1].append(s)
        return cls(N, policy, size, fingerprint, selected, scores, meta)


def save_mask(mask, path):
    data = mask.to_bytes()
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def load_mask(path):
    with open(path, "rb") as fh:
        return FeatureMask.from_bytes(fh.read())


def select_mask(model, policy, size, meta=None):
    """Top-``size`` tokens of every position under ``policy``.

    Order: score descending, then total frequency descending, then token
    text ascending. ``Random`` draws an independent uniform key per entry
    from a generator seeded with ``(seed, k)``, which is a uniform sample
    without replacement.
    """
    if isinstance(policy, str):
        policy = ScorePolicy(policy)
    if size < 0:
        raise ValueError("size must be >= 0")
    scores = entry_scores(model, policy)
    if np.any(np.isnan(scores)):
        raise AssertionError("NaN score")
    tie = (model.f_de.astype(np.int64) + model.f_nu.astype(np.int64))
    selected, kept = [], []
    vocab = model.vocab
    for k in range(1, model.N + 1):
        lo, hi = model.span(k)
        s = scores[lo:hi]
        # vocab ids are sorted like token text
        order = np.lexsort((model.token_ids[lo:hi], -tie[lo:hi], -s))[:size]
        selected.append([vocab[t] for t in model.token_ids[lo:hi][order].tolist()])
        kept.append(s[order].tolist())
    return FeatureMask(model.N, policy, size, model.fingerprint(), selected, kept,
                       meta)
