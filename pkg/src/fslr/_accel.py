"""Optional numba acceleration.

Set ``FSLR_DISABLE_NUMBA=1`` to force the pure-numpy kernels. When numba is
not importable the numpy kernels are used and ``NUMBA_ENABLED`` is False.
"""
import os
import warnings

_FLAG = "FSLR_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    import numba
    from numba import njit, prange

    NUMBA_AVAILABLE = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip probing a TBB runtime that may be too old to load
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def decorator(func):
            return func

        return decorator

    warnings.warn("numba could not be imported; using numpy kernels")

NUMBA_ENABLED = NUMBA_AVAILABLE and not _flag_set()


def set_threads(threads):
    """Bound numba's worker pool; returns the thread count actually in use."""
    if not NUMBA_AVAILABLE or threads is None:
        return 1
    limit = numba.config.NUMBA_NUM_THREADS
    n = max(1, min(int(threads), limit))
    numba.set_num_threads(n)
    return n
