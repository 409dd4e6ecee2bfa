"""Likelihood-ratio estimators.

``mle_ratio`` and ``ulsif_ratio`` act on one element's raw counts;
``smoothed_token_ratio`` adds one to each count and two to each total so it
is always positive; the product estimator multiplies smoothed per-position
ratios of an N-gram's tokens, keeping only tokens whose weight is one.
"""
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
import math

import numpy as np

from .errors import UndefinedRatio
from .kernels import pack_weights, product_log_sums

UNSEEN_POLICIES = ("ignore", "smooth")


@dataclass(frozen=True)
class RatioEstimate:
    """A non-negative ratio held in both linear and log form.

    A zero ratio has ``log_value == -inf``.
    """

    value: float
    log_value: float

    @classmethod
    def from_value(cls, value):
        value = float(value)
        return cls(value, math.log(value) if value > 0 else -math.inf)

    @classmethod
    def from_log(cls, log_value):
        log_value = float(log_value)
        return cls(math.exp(log_value), log_value)

    def __float__(self):
        return self.value


def round_half_up(x, places=1):
    """Round for display the way printed tables do (0.05 -> 0.1)."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def _check_counts(f_de, n_de, f_nu, n_nu):
    if min(f_de, n_de, f_nu, n_nu) < 0:
        raise ValueError("counts must be non-negative")


def _check_lambda(lam):
    if not lam >= 0:  # also rejects NaN
        raise ValueError(f"lambda must be >= 0, got {lam!r}")


def mle_ratio(f_de, n_de, f_nu, n_nu):
    """Ratio of relative frequencies ``(f_nu / n_nu) / (f_de / n_de)``.

    Raises :class:`UndefinedRatio` when ``f_de == 0 < f_nu``.
    """
    _check_counts(f_de, n_de, f_nu, n_nu)
    if n_de == 0 or n_nu == 0:
        raise ValueError("class totals must be positive")
    if f_nu == 0:
        return RatioEstimate(0.0, -math.inf)
    if f_de == 0:
        raise UndefinedRatio(f"f_de = 0 with f_nu = {f_nu}")
    return RatioEstimate.from_value((f_nu / n_nu) / (f_de / n_de))


def ulsif_ratio(f_de, n_de, f_nu, n_nu, lam):
    """Regularized direct estimate ``(f_de / n_de + lam)^-1 * f_nu / n_nu``.

    This is the closed-form minimizer of the delta-basis least-squares
    fitting problem; ``lam = 0`` reduces to :func:`mle_ratio`.
    """
    _check_counts(f_de, n_de, f_nu, n_nu)
    _check_lambda(lam)
    if n_de == 0 or n_nu == 0:
        raise ValueError("class totals must be positive")
    if f_nu == 0:
        return RatioEstimate(0.0, -math.inf)
    den = f_de / n_de + lam
    if den == 0:
        raise UndefinedRatio(f"f_de = 0 with f_nu = {f_nu} and lambda = 0")
    return RatioEstimate.from_value((f_nu / n_nu) / den)


def smoothed_token_ratio(f_de, n_de, f_nu, n_nu, lam):
    """``{(f_de + 1) / (n_de + 2) + lam}^-1 * (f_nu + 1) / (n_nu + 2)``; always > 0."""
    _check_counts(f_de, n_de, f_nu, n_nu)
    _check_lambda(lam)
    num = (f_nu + 1) / (n_nu + 2)
    den = (f_de + 1) / (n_de + 2) + lam
    return RatioEstimate(num / den, math.log(num) - math.log(den))


def smoothed_log_ratios(f_de, n_de, f_nu, n_nu, lam):
    """Vectorized ``log`` of :func:`smoothed_token_ratio` over count arrays."""
    _check_lambda(lam)
    f_de = np.asarray(f_de, dtype=np.float64)
    f_nu = np.asarray(f_nu, dtype=np.float64)
    num = (f_nu + 1.0) / (n_nu + 2)
    den = (f_de + 1.0) / (n_de + 2) + lam
    return np.log(num) - np.log(den)


def _weighted(mask, k, token):
    return mask is None or token in mask.sets()[k - 1]


def product_estimate(window, model, mask, lam, unseen="ignore"):
    """Product of smoothed per-position ratios with 0/1 weights.

    A token has weight one at position ``k`` when it is selected in
    ``mask`` there; ``mask=None`` selects every token the model saw at ``k``.
    Tokens the model never saw at ``k`` have weight zero, unless
    ``mask is None`` and ``unseen="smooth"``, in which case they contribute
    the ratio of zero counts.
    """
    window = tuple(window)
    if len(window) != model.N:
        raise ValueError(f"window has {len(window)} tokens, model order is {model.N}")
    if mask is not None and mask.N != model.N:
        raise ValueError("mask order differs from model order")
    _check_unseen(unseen, mask)
    total = 0.0
    for k, tok in enumerate(window, start=1):
        j = model.lookup(k, tok)
        if j < 0:
            if mask is None and unseen == "smooth":
                total += smoothed_token_ratio(0, model.n_de, 0, model.n_nu, lam).log_value
            continue
        if not _weighted(mask, k, tok):
            continue
        f_de, f_nu = int(model.f_de[j]), int(model.f_nu[j])
        total += smoothed_token_ratio(f_de, model.n_de, f_nu, model.n_nu, lam).log_value
    return RatioEstimate.from_log(total)


def _check_unseen(unseen, mask):
    if unseen not in UNSEEN_POLICIES:
        raise ValueError(f"unseen must be one of {UNSEEN_POLICIES}")
    if unseen == "smooth" and mask is not None:
        raise ValueError("unseen='smooth' only applies without a mask")


class ProductEstimator:
    """Vectorized product estimator over a frozen model.

    Holds, per position, a bitset of the weighted model-vocabulary ids and
    the sorted ids with their smoothed log ratios. Only weighted entries are
    resident and only weighted tokens reach the table lookup, so a
    selective mask shrinks both memory and estimation time.
    """

    def __init__(self, model, mask=None, lam=0.0, unseen="ignore"):
        _check_lambda(lam)
        _check_unseen(unseen, mask)
        if mask is not None and mask.N != model.N:
            raise ValueError("mask order differs from model order")
        self.model = model
        self.mask = mask
        self.unseen = unseen
        if mask is None:
            keep = slice(None)
            self.offsets = model.offsets.copy()
        else:
            keep = model.mask_entries(mask)
            counts = np.bincount(model.positions()[keep] - 1, minlength=model.N)
            self.offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.table_ids = np.ascontiguousarray(model.token_ids[keep])
        self._f_de = model.f_de[keep]
        self._f_nu = model.f_nu[keep]
        self.weight_bits = pack_weights(model.N, max(len(model.vocab), 1),
                                        self.offsets, self.table_ids)
        self._set_lambda(lam)

    def _set_lambda(self, lam):
        _check_lambda(lam)
        m = self.model
        self.lam = float(lam)
        self.table_logs = smoothed_log_ratios(self._f_de, m.n_de, self._f_nu,
                                              m.n_nu, self.lam)
        self.unseen_logs = np.zeros(m.N, dtype=np.float64)
        if self.unseen == "smooth":
            self.unseen_logs[:] = smoothed_token_ratio(0, m.n_de, 0, m.n_nu,
                                                       self.lam).log_value

    def with_lambda(self, lam):
        """Same tables with a different regularization parameter."""
        other = object.__new__(ProductEstimator)
        other.__dict__.update(self.__dict__)
        other._set_lambda(lam)
        return other

    @property
    def entry_count(self):
        return len(self.table_ids)

    def encode(self, batch):
        """Map a :class:`WindowBatch` into model-vocabulary ids (-1 = unseen)."""
        if batch.order != self.model.N:
            raise ValueError(f"windows have order {batch.order}, "
                             f"model order is {self.model.N}")
        index = self.model.token_index
        translate = np.fromiter((index.get(t, -1) for t in batch.vocab),
                                dtype=np.int64, count=len(batch.vocab))
        if len(translate) == 0:
            return np.full(batch.ids.shape, -1, dtype=np.int64)
        return translate[batch.ids]

    def log_estimates(self, ids, parallel=False):
        """Log estimates for rows of model-space ``ids`` (see :meth:`encode`)."""
        return product_log_sums(ids, self.weight_bits, self.offsets, self.table_ids,
                                self.table_logs, self.unseen_logs,
                                parallel=parallel)

    def estimate(self, tokens):
        tokens = tuple(tokens)
        if len(tokens) != self.model.N:
            raise ValueError(f"window has {len(tokens)} tokens, "
                             f"model order is {self.model.N}")
        index = self.model.token_index
        row = np.array([[index.get(t, -1) for t in tokens]], dtype=np.int64)
        return RatioEstimate.from_log(self.log_estimates(row)[0])

