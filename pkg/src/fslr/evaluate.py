"""Ranking test N-grams by their estimate and scoring the top of the list.

Ordering is a total order: undefined ratios first (infinite evidence), then
log estimate descending, then the token sequence ascending.
"""
from dataclasses import asdict, dataclass, field
import time

import numpy as np

from .corpus import WindowBatch
from .counts import footprint_report
from .estimator import ProductEstimator


@dataclass(frozen=True, eq=False)
class RankedList:
    ngrams: list
    log_estimates: np.ndarray
    undefined: np.ndarray = None

    def __post_init__(self):
        if self.undefined is None:
            object.__setattr__(self, "undefined",
                               np.zeros(len(self.ngrams), dtype=bool))

    def __len__(self):
        return len(self.ngrams)

    @property
    def ranks(self):
        return np.arange(1, len(self.ngrams) + 1)

    def entries(self):
        """(ngram, log_estimate, rank) triples."""
        return list(zip(self.ngrams, self.log_estimates.tolist(),
                        self.ranks.tolist()))


@dataclass(frozen=True)
class JudgeSet:
    """Distinct N-grams that occur at least once as entity contexts."""

    members: frozenset

    def __len__(self):
        return len(self.members)

    def __contains__(self, ngram):
        return tuple(ngram) in self.members


def judge_set(windows):
    if isinstance(windows, WindowBatch):
        return JudgeSet(frozenset(windows.ngram(w)
                                  for w in np.flatnonzero(windows.labels)))
    return JudgeSet(frozenset(tuple(w.tokens) for w in windows if w.is_ne))


def rank_order(log_values, undefined=None):
    """Permutation ranking rows by (undefined first, log desc, row index asc)."""
    log_values = np.asarray(log_values, dtype=np.float64)
    if np.any(np.isnan(log_values)):
        raise ValueError("NaN estimate")
    idx = np.arange(len(log_values))
    if undefined is None:
        return np.lexsort((idx, -log_values))
    undefined = np.asarray(undefined, dtype=bool)
    return np.lexsort((idx, -np.where(undefined, 0.0, log_values), ~undefined))


def rank_ngrams(ngrams, log_values, undefined=None):
    """Rank arbitrary N-grams; duplicates are kept as separate entries."""
    ngrams = [tuple(g) for g in ngrams]
    lex = sorted(range(len(ngrams)), key=ngrams.__getitem__)
    log_values = np.asarray(log_values, dtype=np.float64)[lex]
    und = None if undefined is None else np.asarray(undefined, dtype=bool)[lex]
    order = rank_order(log_values, und)
    return RankedList([ngrams[lex[i]] for i in order.tolist()], log_values[order],
                      None if und is None else und[order])


@dataclass(frozen=True, eq=False)
class TestTypes:
    """Judged N-gram rows of a batch, sorted lexicographically.

    With ``distinct=True`` (the default) each row is one N-gram type;
    otherwise every window is a row and ``type_of`` maps rows to types so
    recall still counts each relevant type once. Row index order is the
    final tie-break of the ranking.
    """

    batch: WindowBatch
    ids: np.ndarray
    correct: np.ndarray
    n_relevant: int
    type_of: np.ndarray = None

    @classmethod
    def from_batch(cls, batch, distinct=True):
        if len(batch) == 0:
            return cls(batch, batch.ids, np.zeros(0, dtype=bool), 0)
        types, inv = np.unique(batch.ids, axis=0, return_inverse=True)
        inv = inv.ravel()
        relevant = np.zeros(len(types), dtype=bool)
        relevant[inv[batch.labels]] = True
        n_rel = int(relevant.sum())
        if distinct:
            return cls(batch, types, relevant, n_rel)
        order = np.argsort(inv, kind="stable")
        return cls(batch, batch.ids[order], relevant[inv[order]], n_rel,
                   inv[order])

    def __len__(self):
        return len(self.ids)

    def ngram(self, r):
        vocab = self.batch.vocab
        return tuple(vocab[t] for t in self.ids[r])

    def model_ids(self, estimator):
        sub = WindowBatch(self.batch.vocab, self.ids, self.correct)
        return estimator.encode(sub)

    def prf(self, order, cutoff):
        """``(precision, recall, f1)`` of the first ``cutoff`` rows of ``order``."""
        if cutoff < 1:
            raise ValueError("cutoff must be >= 1")
        top = order[:cutoff]
        hits = int(self.correct[top].sum())
        found = hits
        if self.type_of is not None:
            found = len(np.unique(self.type_of[top][self.correct[top]]))
        return _prf(hits, len(top), self.n_relevant, found)

    def recall_curve(self, order, max_rank):
        top = order[:max_rank]
        hit = self.correct[top]
        if self.type_of is not None:
            first = np.zeros(len(top), dtype=bool)
            _, idx = np.unique(self.type_of[top][hit], return_index=True)
            first[np.flatnonzero(hit)[idx]] = True
            hit = first
        recall = np.cumsum(hit.astype(np.int64)) / self.n_relevant
        return list(zip(range(1, len(top) + 1), recall.tolist()))


def _prf(hits, n_top, n_relevant, found=None):
    if n_relevant == 0:
        raise ValueError("empty judge set: recall is undefined")
    p = hits / n_top if n_top else 0.0
    r = (hits if found is None else found) / n_relevant
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


def rank_test_set(test_windows, model, mask, lam, unseen="ignore", distinct=True,
                  parallel=False):
    """Rank the (distinct) test N-grams by the product estimate."""
    types = _as_types(test_windows, distinct)
    est = ProductEstimator(model, mask, lam, unseen=unseen)
    logs = est.log_estimates(types.model_ids(est), parallel=parallel)
    order = rank_order(logs)
    return RankedList([types.ngram(r) for r in order.tolist()], logs[order])


def _as_types(windows, distinct=True):
    if isinstance(windows, TestTypes):
        return windows
    if not isinstance(windows, WindowBatch):
        windows = WindowBatch.from_windows(windows)
    return TestTypes.from_batch(windows, distinct)


def precision_recall_f1(ranked, R, cutoff):
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    top = ranked.ngrams[:cutoff]
    hits = sum(1 for g in top if g in R.members)
    return _prf(hits, len(top), len(R), len(R.members.intersection(top)))


def rank_recall_curve(ranked, R, max_rank):
    """Recall after each of the first ``max_rank`` ranks."""
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    if len(R) == 0:
        raise ValueError("empty judge set: recall is undefined")
    seen = set()
    curve = []
    for rank, g in enumerate(ranked.ngrams[:max_rank], start=1):
        if g in R.members:
            seen.add(g)
        curve.append((rank, len(seen) / len(R)))
    return curve


@dataclass
class BenchResult:
    time_seconds_mean: float
    per_run: list
    n_windows: int
    entry_count: int


def bench_estimation(test_windows, model, mask, lam, runs=10, unseen="ignore",
                     parallel=False):
    """Wall time of estimating every test window (instances, not types).

    Encoding to model ids and kernel compilation happen before the clock
    starts; ranking is not timed.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    batch = test_windows if isinstance(test_windows, WindowBatch) \
        else WindowBatch.from_windows(test_windows)
    est = ProductEstimator(model, mask, lam, unseen=unseen)
    ids = est.encode(batch)
    est.log_estimates(ids[:1], parallel=parallel)  # warm-up / JIT
    per_run = []
    for _ in range(runs):
        t0 = time.perf_counter()
        est.log_estimates(ids, parallel=parallel)
        per_run.append(time.perf_counter() - t0)
    return BenchResult(sum(per_run) / runs, per_run, len(batch), est.entry_count)


@dataclass
class EvalReport:
    cutoff: int
    precision: float
    recall: float
    f1: float
    n_types: int
    n_relevant: int
    curve: list = field(default_factory=list)
    footprint: dict = field(default_factory=dict)
    time_seconds: float = None
    runs: int = 0
    per_run: list = None

    def to_dict(self):
        d = asdict(self)
        d.pop("curve")
        return d


def evaluate(test_batch, model, mask, lam, cutoff=8000, max_rank=None, runs=0,
             unseen="ignore", distinct=True, parallel=False):
    """Rank, judge and (optionally) time one estimator configuration."""
    types = _as_types(test_batch, distinct)
    est = ProductEstimator(model, mask, lam, unseen=unseen)
    logs = est.log_estimates(types.model_ids(est), parallel=parallel)
    order = rank_order(logs)
    p, r, f1 = types.prf(order, cutoff)
    curve = types.recall_curve(order, cutoff if max_rank is None else max_rank)
    stored = model.restrict(mask) if mask is not None else model
    report = EvalReport(cutoff, p, r, f1, len(types), types.n_relevant, curve,
                        footprint_report(stored))
    if runs:
        bench = bench_estimation(types.batch, model, mask, lam, runs, unseen, parallel)
        report.time_seconds = bench.time_seconds_mean
        report.runs = runs
        report.per_run = bench.per_run
    return report
