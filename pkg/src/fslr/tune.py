"""Validation-F1 selection of the regularization parameter and subset sweeps."""
from dataclasses import dataclass

from .errors import ConfigError
from .estimator import ProductEstimator
from .evaluate import _as_types, rank_order
from .featsel import ScorePolicy, select_mask

DEFAULT_LAMBDAS = tuple(float(f"1e-{e}") for e in range(9, 0, -1))
DEFAULT_SUBSET_SIZES = (100, 500, 1000, 5000, 10000, 50000, 100000)
TUNE_MAGIC = "#fslr-tune"


@dataclass(frozen=True)
class TuneGrid:
    lambdas: tuple = DEFAULT_LAMBDAS
    cutoff: int = 8000

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        if not self.lambdas:
            raise ConfigError("lambda grid is empty")
        if any(not x >= 0 for x in self.lambdas):
            raise ConfigError("lambda grid values must be >= 0")
        if list(self.lambdas) != sorted(self.lambdas):
            raise ConfigError("lambda grid must be sorted ascending")
        if self.cutoff < 1:
            raise ConfigError("cutoff must be >= 1")


@dataclass(frozen=True)
class SweepGrid:
    subset_sizes: tuple = DEFAULT_SUBSET_SIZES

    def __post_init__(self):
        object.__setattr__(self, "subset_sizes", tuple(int(s) for s in self.subset_sizes))
        if not self.subset_sizes or any(s < 0 for s in self.subset_sizes):
            raise ConfigError("subset sizes must be non-negative and non-empty")
        if list(self.subset_sizes) != sorted(self.subset_sizes):
            raise ConfigError("subset sizes must be sorted ascending")


@dataclass(frozen=True)
class TuneRow:
    lam: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class TuneResult:
    best_lambda: float
    best_f1: float
    rows: tuple

    @property
    def best(self):
        return next(r for r in self.rows if r.lam == self.best_lambda)


@dataclass(frozen=True)
class SweepRow:
    policy: str
    size: object  # int, or "all" for the unmasked baselines
    lam: float
    precision: float
    recall: float
    f1: float


def tune_lambda(model, mask, validation, grid=None, unseen="ignore",
                parallel=False, distinct=True):
    """Evaluate every grid value on the validation set; F1 ties go to larger λ."""
    grid = grid or TuneGrid()
    types = _as_types(validation, distinct)
    if len(types) == 0:
        raise ValueError("validation set is empty")
    if types.n_relevant == 0:
        raise ValueError("validation set has no entity-context windows")
    base = ProductEstimator(model, mask, grid.lambdas[0], unseen=unseen)
    ids = types.model_ids(base)
    rows = []
    for lam in grid.lambdas:
        logs = base.with_lambda(lam).log_estimates(ids, parallel=parallel)
        rows.append(TuneRow(lam, *types.prf(rank_order(logs), grid.cutoff)))
    best = max(rows, key=lambda r: (r.f1, r.lam))
    return TuneResult(best.lam, best.f1, tuple(rows))


def evaluate_lambda(model, mask, validation, lam, cutoff=8000, unseen="ignore",
                    parallel=False, distinct=True):
    """``(precision, recall, f1)`` of one fixed configuration."""
    types = _as_types(validation, distinct)
    est = ProductEstimator(model, mask, lam, unseen=unseen)
    logs = est.log_estimates(types.model_ids(est), parallel=parallel)
    return types.prf(rank_order(logs), cutoff)


def sweep_subset_size(model, policy, sweep, validation, grid=None, unseen="ignore",
                      parallel=False, distinct=True):
    """One row per subset size: mask, tune λ, record validation F1."""
    if isinstance(policy, str):
        policy = ScorePolicy(policy)
    sweep = sweep or SweepGrid()
    grid = grid or TuneGrid()
    types = _as_types(validation, distinct)
    rows = []
    for s in sweep.subset_sizes:
        mask = select_mask(model, policy, s)
        res = tune_lambda(model, mask, types, grid, parallel=parallel)
        b = res.best
        rows.append(SweepRow(policy.kind, s, b.lam, b.precision, b.recall, b.f1))
    return rows


def baseline_rows(model, validation, grid=None, unseen="ignore", parallel=False,
                  distinct=True):
    """The two unmasked baselines: tuned λ* and λ = 0."""
    grid = grid or TuneGrid()
    types = _as_types(validation, distinct)
    res = tune_lambda(model, None, types, grid, unseen=unseen, parallel=parallel)
    b = res.best
    p0 = evaluate_lambda(model, None, types, 0.0, grid.cutoff, unseen, parallel)
    return [SweepRow("All", "all", b.lam, b.precision, b.recall, b.f1),
            SweepRow("All", "all", 0.0, *p0)]


def format_tune_report(rows, header_fields, config_json):
    """Tuning report TSV. ``rows`` are ``(policy, size, TuneRow, is_best)``."""
    head = "\t".join([TUNE_MAGIC, "format_version=1"]
                     + [f"{k}={v}" for k, v in header_fields])
    out = [head, "#config\t" + config_json,
           "policy\ts\tlambda\tprecision\trecall\tf1\tbest"]
    for policy, size, r, best in rows:
        out.append(f"{policy}\t{size}\t{r.lam!r}\t{r.precision!r}\t{r.recall!r}\t"
                   f"{r.f1!r}\t{int(best)}")
    return ("\n".join(out) + "\n").encode("utf-8")


def parse_tune_report(data):
    """Rows of a tuning report as dicts (numbers parsed)."""
    lines = data.decode("utf-8").splitlines()
    if not lines or not lines[0].startswith(TUNE_MAGIC):
        raise ValueError("not a tuning report")
    cols = lines[2].split("\t")
    rows = []
    for line in lines[3:]:
        rec = dict(zip(cols, line.split("\t")))
        for key in ("lambda", "precision", "recall", "f1"):
            rec[key] = float(rec[key])
        rec["best"] = rec["best"] == "1"
        rows.append(rec)
    return rows

