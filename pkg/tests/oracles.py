"""Independent reference implementations used only by the tests.

Everything here is written from the definitions, with exact rationals or
high-precision arithmetic, and shares no code with the package.
"""
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

# ---- ratios ---------------------------------------------------------------


def mle_exact(f_de, n_de, f_nu, n_nu):
    if f_nu == 0:
        return Fraction(0)
    if f_de == 0:
        return None  # undefined
    return Fraction(f_nu, n_nu) / Fraction(f_de, n_de)


def ulsif_exact(f_de, n_de, f_nu, n_nu, lam):
    lam = Fraction(lam)
    if f_nu == 0:
        return Fraction(0)
    den = Fraction(f_de, n_de) + lam
    if den == 0:
        return None
    return Fraction(f_nu, n_nu) / den


def smoothed_exact(f_de, n_de, f_nu, n_nu, lam):
    return Fraction(f_nu + 1, n_nu + 2) / (Fraction(f_de + 1, n_de + 2) + Fraction(lam))


def log_exact(q, dps=50):
    with mpmath.workdps(dps):
        return mpmath.log(mpmath.mpf(q.numerator) / q.denominator)


# ---- score functions ------------------------------------------------------


def _probs(a, b, a_bar, b_bar):
    n = a + b + a_bar + b_bar
    return (Fraction(a, n), Fraction(b, n), Fraction(a_bar, n), Fraction(b_bar, n))


def gss_exact(a, b, a_bar, b_bar):
    p_tc, p_tcb, p_tbc, p_tbcb = _probs(a, b, a_bar, b_bar)
    return p_tc * p_tbcb - p_tcb * p_tbc


def chi2_exact(a, b, a_bar, b_bar):
    """As printed: squared GSS over the product of the four joint cells."""
    p_tc, p_tcb, p_tbc, p_tbcb = _probs(a, b, a_bar, b_bar)
    num = (p_tc * p_tbcb - p_tcb * p_tbc) ** 2
    den = p_tc * p_tcb * p_tbc * p_tbcb
    if num == 0:
        return Fraction(0)
    if den == 0:
        return float("inf")
    return num / den


def cet_exact(a, b, a_bar, b_bar, dps=60):
    """Sum over classes of p(t,c) log[p(t,c) / (p(t) p(c))], natural log.

    Every ratio inside the logs is an exact Fraction; only the log itself is
    evaluated, at ``dps`` decimal digits.
    """
    p_tc, p_tcb, p_tbc, p_tbcb = _probs(a, b, a_bar, b_bar)
    p_t = p_tc + p_tcb
    p_c = p_tc + p_tbc
    p_cb = p_tcb + p_tbcb
    total = mpmath.mpf(0)
    with mpmath.workdps(dps):
        for joint, marg in ((p_tc, p_c), (p_tcb, p_cb)):
            if joint == 0:
                continue
            q = joint / (p_t * marg)
            total += mpmath.mpf(joint.numerator) / joint.denominator * log_exact(q, dps)
        return total


# ---- QP oracle -------------------------------------------------------------


@dataclass
class QPInstance:
    """min_beta 1/2 beta^T H beta - h^T beta + lam/2 beta^T beta."""

    H: np.ndarray
    h: np.ndarray
    lam: float
    f_de: np.ndarray = None
    f_nu: np.ndarray = None

    @property
    def v(self):
        return len(self.h)

    @property
    def diag_H(self):
        return np.diag(self.H).copy()


def qp_from_counts(f_de, f_nu):
    """Build H and h from sample-level definitions with the delta basis.

    H = (1/n_de) sum_i phi(x_i) phi(x_i)^T over denominator samples and
    h = (1/n_nu) sum_j phi(x_j) over numerator samples, where phi(x) is the
    indicator vector of x. Repeated samples are accumulated by multiplicity.
    """
    f_de = np.asarray(f_de, dtype=np.int64)
    f_nu = np.asarray(f_nu, dtype=np.int64)
    v = len(f_de)
    n_de, n_nu = int(f_de.sum()), int(f_nu.sum())
    eye = np.eye(v)
    H = np.zeros((v, v))
    h = np.zeros(v)
    for l in range(v):
        phi = eye[l]
        H += f_de[l] * np.outer(phi, phi)
        h += f_nu[l] * phi
    return H / n_de, h / n_nu, n_de, n_nu


def qp_solve_numeric(inst, tol=1e-10, max_sweeps=10_000):
    """Gauss-Seidel on the stationarity condition (H + lam I) beta = h.

    Stops when the infinity-norm residual of the gradient is <= ``tol``
    relative to ``max(1, |h|_inf)``; raises if it never gets there.
    """
    A = inst.H + inst.lam * np.eye(inst.v)
    if np.any(np.diag(A) <= 0):
        raise ValueError("objective is not strictly convex")
    beta = np.zeros(inst.v)
    scale = max(1.0, float(np.abs(inst.h).max(initial=0.0)))
    for _ in range(max_sweeps):
        for l in range(inst.v):
            r = inst.h[l] - A[l] @ beta + A[l, l] * beta[l]
            beta[l] = r / A[l, l]
        grad = A @ beta - inst.h
        if np.abs(grad).max(initial=0.0) <= tol * scale:
            return beta
    raise RuntimeError("Gauss-Seidel did not converge")


def random_qp_instance(rng, v_max=50, count_max=10 ** 6):
    v = int(rng.integers(1, v_max + 1))
    f_de = rng.integers(0, count_max + 1, size=v)
    f_de[rng.random(v) < 0.2] = 0
    if f_de.sum() == 0:
        f_de[0] = 1
    f_nu = rng.integers(0, count_max + 1, size=v)
    f_nu[rng.random(v) < 0.2] = 0
    if f_nu.sum() == 0:
        f_nu[-1] = 1
    lam = float(10 ** rng.uniform(-9, -1))
    H, h, _, _ = qp_from_counts(f_de, f_nu)
    return QPInstance(H, h, lam, f_de, f_nu)


# ---- counting, windows, estimates -------------------------------------------


def windows_by_hand(doc_tokens, spans, N, etype):
    """Every (window, label) pair, enumerated slot by slot."""
    starts = {s for s, _, t in spans if t == etype}
    out = []
    for i in range(len(doc_tokens)):
        if i - N < 0:
            continue
        out.append((tuple(doc_tokens[i - N:i]), i in starts))
    return out


def count_by_hand(windows, N, denominator="complement"):
    """{(k, token): [f_de, f_nu]} and the class totals, by direct iteration."""
    table = {}
    n_de = n_nu = 0
    for tokens, is_ne in windows:
        assert len(tokens) == N
        in_de = (not is_ne) or denominator == "all"
        n_de += in_de
        n_nu += bool(is_ne)
        for k, t in enumerate(tokens, start=1):
            cell = table.setdefault((k, t), [0, 0])
            cell[0] += in_de
            cell[1] += bool(is_ne)
    return table, n_de, n_nu


def product_exact(window, table, n_de, n_nu, selected, lam, unseen_prior=False):
    """log of the product estimate by exact per-token evaluation.

    ``selected`` is a list of sets (one per position) or None for all seen.
    """
    total = mpmath.mpf(0)
    for k, tok in enumerate(window, start=1):
        cell = table.get((k, tok))
        if cell is None:
            if selected is None and unseen_prior:
                total += log_exact(smoothed_exact(0, n_de, 0, n_nu, lam))
            continue
        if selected is not None and tok not in selected[k - 1]:
            continue
        total += log_exact(smoothed_exact(cell[0], n_de, cell[1], n_nu, lam))
    return total


def prf_by_hand(ranked, relevant, cutoff):
    top = ranked[:cutoff]
    hits = sum(1 for g in top if g in relevant)
    p = Fraction(hits, len(top)) if top else Fraction(0)
    r = Fraction(len(set(top) & set(relevant)), len(relevant))
    f1 = 2 * p * r / (p + r) if p + r else Fraction(0)
    return p, r, f1


def token_lift(docs, token, etype, offset):
    """Empirical P(token at offset left of entity) / P(token elsewhere)."""
    at_entity = Counter()
    elsewhere = Counter()
    for d in docs:
        starts = {s for s, _, t in d.entity_spans if t == etype}
        slots = {s - offset for s in starts if s - offset >= 0}
        for i, tok in enumerate(d.tokens):
            bucket = at_entity if i in slots else elsewhere
            bucket[tok == token] += 1
    p_in = at_entity[True] / max(1, at_entity[True] + at_entity[False])
    p_out = elsewhere[True] / max(1, elsewhere[True] + elsewhere[False])
    return p_in, p_out
