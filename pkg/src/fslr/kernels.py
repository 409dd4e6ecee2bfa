"""Hot loops: per-window log-likelihood-ratio accumulation.

Weights are a packed little-endian bitset per position: token ``t`` has
weight one at position ``k`` iff bit ``t & 7`` of ``weight_bits[k, t >> 3]``
is set. Weighted entries are stored CSR-style: those of position ``k`` are
``table_ids[offsets[k]:offsets[k + 1]]`` (sorted ascending) with the matching
log ratios in ``table_logs``; every set bit must have a table entry. A token
with weight zero, or a negative id (unknown to the model), contributes
``unseen_logs[k]`` without touching the table.

Both implementations add the per-position terms left to right, so they return
bit-identical sums.
"""
import numpy as np

from ._accel import NUMBA_ENABLED, njit, prange


def pack_weights(order, vocab_size, offsets, table_ids):
    """Bitset marking every table entry of every position."""
    bits = np.zeros((order, vocab_size), dtype=bool)
    for k in range(order):
        bits[k, table_ids[offsets[k]:offsets[k + 1]]] = True
    return np.packbits(bits, axis=1, bitorder="little")


def _check(ids, weight_bits, offsets, table_ids, table_logs, unseen_logs):
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    if ids.ndim != 2:
        raise ValueError("ids must be a 2-d (windows x order) array")
    order = ids.shape[1]
    weight_bits = np.ascontiguousarray(weight_bits, dtype=np.uint8)
    if weight_bits.ndim != 2 or weight_bits.shape[0] != order:
        raise ValueError("weight_bits must have one row per position")
    if ids.size and ids.max() >= 8 * weight_bits.shape[1]:
        raise ValueError("token id beyond the weight bitset")
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if offsets.shape != (order + 1,):
        raise ValueError(f"offsets must have length {order + 1}")
    table_ids = np.ascontiguousarray(table_ids, dtype=np.int64)
    table_logs = np.ascontiguousarray(table_logs, dtype=np.float64)
    if table_ids.shape != table_logs.shape or offsets[-1] != table_ids.shape[0]:
        raise ValueError("table arrays disagree with offsets")
    unseen_logs = np.ascontiguousarray(unseen_logs, dtype=np.float64)
    if unseen_logs.shape != (order,):
        raise ValueError(f"unseen_logs must have length {order}")
    return ids, weight_bits, offsets, table_ids, table_logs, unseen_logs


def product_log_sums_numpy(ids, weight_bits, offsets, table_ids, table_logs,
                           unseen_logs):
    ids, weight_bits, offsets, table_ids, table_logs, unseen_logs = _check(
        ids, weight_bits, offsets, table_ids, table_logs, unseen_logs)
    n, order = ids.shape
    acc = np.zeros(n, dtype=np.float64)
    for k in range(order):
        lo, hi = offsets[k], offsets[k + 1]
        col = ids[:, k]
        safe = np.maximum(col, 0)
        on = (col >= 0) & (((weight_bits[k, safe >> 3] >> (safe & 7)) & 1) == 1)
        contrib = np.full(n, unseen_logs[k])
        if hi > lo and on.any():
            pos = np.searchsorted(table_ids[lo:hi], col[on])
            contrib[on] = table_logs[lo + pos]
        acc += contrib
    return acc


@njit(cache=True, nogil=True)
def _lookup(table_ids, lo, hi, t):
    # leftmost binary search on table_ids[lo:hi]
    while lo < hi:
        mid = (lo + hi) >> 1
        if table_ids[mid] < t:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True, nogil=True)
def _row_sum(ids, w, weight_bits, offsets, table_ids, table_logs, unseen_logs):
    acc = 0.0
    for k in range(ids.shape[1]):
        t = ids[w, k]
        if t < 0 or ((weight_bits[k, t >> 3] >> (t & 7)) & 1) == 0:
            acc += unseen_logs[k]
            continue
        j = _lookup(table_ids, offsets[k], offsets[k + 1], t)
        acc += table_logs[j]
    return acc


@njit(cache=True, nogil=True)
def _product_log_sums_serial(ids, weight_bits, offsets, table_ids, table_logs,
                             unseen_logs):
    n = ids.shape[0]
    out = np.empty(n, dtype=np.float64)
    for w in range(n):
        out[w] = _row_sum(ids, w, weight_bits, offsets, table_ids, table_logs,
                          unseen_logs)
    return out


@njit(cache=True, nogil=True, parallel=True)
def _product_log_sums_parallel(ids, weight_bits, offsets, table_ids, table_logs,
                               unseen_logs):
    n = ids.shape[0]
    out = np.empty(n, dtype=np.float64)
    for w in prange(n):
        out[w] = _row_sum(ids, w, weight_bits, offsets, table_ids, table_logs,
                          unseen_logs)
    return out


def product_log_sums_numba(ids, weight_bits, offsets, table_ids, table_logs,
                           unseen_logs, parallel=False):
    args = _check(ids, weight_bits, offsets, table_ids, table_logs, unseen_logs)
    if parallel:
        return _product_log_sums_parallel(*args)
    return _product_log_sums_serial(*args)


def product_log_sums(ids, weight_bits, offsets, table_ids, table_logs,
                     unseen_logs, parallel=False):
    """Sum of per-position log ratios for every row of ``ids``.

    Dispatches to the numba kernel unless disabled via ``FSLR_DISABLE_NUMBA``.
    ``parallel`` only affects the numba path; results do not depend on it.
    """
    if NUMBA_ENABLED:
        return product_log_sums_numba(ids, weight_bits, offsets, table_ids,
                                      table_logs, unseen_logs, parallel=parallel)
    return product_log_sums_numpy(ids, weight_bits, offsets, table_ids,
                                  table_logs, unseen_logs)


def backend():
    return "numba" if NUMBA_ENABLED else "numpy"
