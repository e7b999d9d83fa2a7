"""Closed-form transition probabilities w_mn of the singular oscillator.

Two independent routes are provided:

* ``"hypergeometric"``: the terminating 2F1(-S, L+2j; L-S+1; rho) form with
  L = max(m, n), S = min(m, n);
* ``"jacobi"``: the equivalent Jacobi form with P_S^(|m-n|, 2j-1)(1 - 2 rho).

Both accumulate the Gamma/factorial prefactor in log space and exponentiate
once, so large levels do not overflow.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .algebra import RepresentationWeight
from .errors import DomainError, LogMagnitudeOverflow, TailCapError

__all__ = [
    "TransitionQuery",
    "TransitionTable",
    "energy_level",
    "jacobi_polynomial",
    "terminating_2f1",
    "transition_probability",
    "transition_row",
    "build_table",
    "DEFAULT_MAX_LOG",
    "DEFAULT_TAIL_EPS",
]

METHODS = ("hypergeometric", "jacobi")
DEFAULT_MAX_LOG = 1.0e5
DEFAULT_TAIL_EPS = 1e-10
_EPS = np.finfo(float).eps


def _check_rho(rho):
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho!r}")
    return rho


def _check_level(name, value):
    if int(value) != value or value < 0:
        raise DomainError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def energy_level(n: int, omega: float, weight: RepresentationWeight) -> float:
    """Instantaneous level E_n = 2 omega (n + j)."""
    n = _check_level("n", n)
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega!r}")
    return 2.0 * omega * (n + weight.j)


def jacobi_polynomial(k, alpha, beta, x):
    """P_k^(alpha, beta)(x) by the forward three-term recurrence in degree.

    ``alpha`` and ``x`` may be numpy arrays (broadcast together); ``k`` and
    ``beta`` are scalars.
    """
    p, _ = _jacobi_recurrence(k, alpha, beta, x)
    return p if np.ndim(p) else float(p)


def _jacobi_recurrence(k, alpha, beta, x, dtype=float):
    # Returns (P, err): err is a running bound on the accumulated rounding
    # error, with local errors measured at the actual magnitudes of each
    # product and propagated through the computed coefficients.  The bound
    # is pessimistic by orders of magnitude on the oscillatory part of
    # [-1, 1].
    k = int(k)
    if k < 0:
        raise DomainError(f"degree must be non-negative, got {k}")
    eps = np.finfo(dtype).eps
    a = np.asarray(alpha, dtype=dtype)
    x = np.asarray(x, dtype=dtype)
    b = dtype(beta)
    p_prev = np.ones(np.broadcast(a, x).shape, dtype=dtype)
    if k == 0:
        return p_prev, np.zeros_like(p_prev)
    p = ((a + b + 2) * x + (a - b)) / 2
    err_prev = np.zeros_like(p_prev)
    err = eps * (np.abs((a + b + 2) * x) + np.abs(a - b))
    for n in range(1, k):
        s = 2 * n + a + b
        c1 = 2 * (n + 1) * (n + a + b + 1) * s
        c2x = (s + 1) * s * (s + 2) * x
        c2c = (s + 1) * (a * a - b * b)
        c2 = c2x + c2c
        c3 = 2 * (n + a) * (n + b) * (s + 2)
        local = 8 * eps * ((np.abs(c2x) + np.abs(c2c)) * np.abs(p)
                           + np.abs(c3 * p_prev)) / c1
        p, p_prev = (c2 * p - c3 * p_prev) / c1, p
        err, err_prev = (np.abs(c2) * err + np.abs(c3) * err_prev) / c1 + local, err
    return p, err


def _jacobi_exact(k, alpha, two_j, rho):
    # Explicit sum at x = 1 - 2 rho, where (x-1)/2 = -rho and (x+1)/2 = 1-rho:
    #   P = sum_s C(k+alpha, k-s) C(k+beta, s) (-rho)^s (1-rho)^(k-s)
    # accumulated over a common integer denominator, rounded once.
    if k == 0:
        return 1.0
    pj, qj = float(two_j).as_integer_ratio()
    pb = pj - qj                       # beta = 2j - 1 = pb / qj
    pr, qr = float(rho).as_integer_ratio()
    qc = qr - pr                       # 1 - rho = qc / qr
    top = [1] * (k + 2)                # top[s] = prod_{t=k-s+1}^{k} (qj t + pb)
    for s in range(1, k + 1):
        top[s] = top[s - 1] * (qj * (k - s + 1) + pb)
    num = 0
    for s in range(k + 1):
        num += (math.comb(k + alpha, k - s) * top[s] * (math.factorial(k) // math.factorial(s))
                * qj ** (k - s) * (-pr) ** s * qc ** (k - s))
    den = qr ** k * qj ** k * math.factorial(k)
    try:
        return num / den
    except OverflowError:
        return math.inf


# target relative accuracy of a returned Jacobi value
_JACOBI_REL_ERR = 1e-13
_EXTENDED = np.finfo(np.longdouble).eps < _EPS / 100


def _jacobi_checked(k, alpha, two_j, rho):
    """P_k^(alpha, 2j-1)(1 - 2 rho) to ~1e-13 relative accuracy.

    The recurrence runs in double and in extended precision; their
    difference measures the double-precision error, and the extended value
    is returned unless even it may miss the target (near a root), in which
    case the value is recomputed exactly.  Without an extended long double
    the running error bound decides.
    """
    x = 1.0 - 2.0 * rho
    p, err = _jacobi_recurrence(k, alpha, two_j - 1.0, x)
    p = np.array(p, dtype=float, ndmin=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        if _EXTENDED:
            pl, _ = _jacobi_recurrence(k, alpha, two_j - 1.0, x, dtype=np.longdouble)
            pl = np.array(pl, ndmin=1)
            diff = np.abs(p - pl)
            scale = np.finfo(np.longdouble).eps / _EPS
            bad = (diff * scale * 10 > _JACOBI_REL_ERR * np.abs(pl)) | (pl == 0)
            p = pl.astype(float)
        else:
            bad = np.array(err, ndmin=1) > _JACOBI_REL_ERR * np.abs(p)
    if np.any(bad):
        al = np.broadcast_to(np.asarray(alpha, dtype=float), p.shape)
        for i in np.flatnonzero(bad):
            p[i] = _jacobi_exact(k, int(al[i]), two_j, rho)
    return p


@functools.lru_cache(maxsize=65536)
def _jacobi_scalar(k, alpha, two_j, rho):
    # Plain-float recurrence for a single value; defers to the checked
    # vector path when the (pessimistic) running bound is not conclusive.
    a, b, x = float(alpha), two_j - 1.0, 1.0 - 2.0 * rho
    p_prev, p = 1.0, ((a + b + 2) * x + (a - b)) / 2
    if k == 0:
        return 1.0
    err_prev, err = 0.0, _EPS * (abs((a + b + 2) * x) + abs(a - b))
    for n in range(1, k):
        s = 2 * n + a + b
        c1 = 2 * (n + 1) * (n + a + b + 1) * s
        c2x = (s + 1) * s * (s + 2) * x
        c2c = (s + 1) * (a * a - b * b)
        c2 = c2x + c2c
        c3 = 2 * (n + a) * (n + b) * (s + 2)
        local = 8 * _EPS * ((abs(c2x) + abs(c2c)) * abs(p) + abs(c3 * p_prev)) / c1
        p, p_prev = (c2 * p - c3 * p_prev) / c1, p
        err, err_prev = (abs(c2) * err + abs(c3) * err_prev) / c1 + local, err
    if err <= _JACOBI_REL_ERR * abs(p):
        return p
    return float(_jacobi_checked(k, alpha, two_j, rho)[0])


def terminating_2f1(S: int, L: int, two_j: float, rho: float) -> float:
    """2F1(-S, L + 2j; L - S + 1; rho) by finite summation.

    The alternating terms can exceed the result by many orders of magnitude
    for rho near 1, so the sum is carried out exactly: every float is a
    dyadic rational, the ratio-form terms are brought over one common
    integer denominator, and the final quotient is rounded once.
    """
    S = _check_level("S", S)
    L = _check_level("L", L)
    if L < S:
        raise DomainError(f"need L >= S, got L={L}, S={S}")
    rho = _check_rho(rho)
    if S == 0 or rho == 0.0:
        return 1.0
    pj, qj = float(two_j).as_integer_ratio()
    pr, qr = rho.as_integer_ratio()
    c0 = L - S + 1

    # tail[k] = prod_{i=k}^{S-1} (c0 + i) * S!/k!  so that
    # tail[k] / tail[0] = 1 / ((c0)_k k!)
    tail = [1] * (S + 1)
    for k in range(S - 1, -1, -1):
        tail[k] = tail[k + 1] * (c0 + k) * (k + 1)

    num = 0
    head = 1      # (-S)_k * prod_{i<k} (qj (L + i) + pj)
    for k in range(S + 1):
        num += head * tail[k] * (qj * qr) ** (S - k) * pr ** k
        head *= (k - S) * (qj * (L + k) + pj)
    den = tail[0] * (qj * qr) ** S
    return num / den


@dataclass(frozen=True)
class TransitionQuery:
    """Transition |m> -> |n> at reflection parameter ``rho``."""

    weight: RepresentationWeight
    rho: float
    m: int
    n: int

    def __post_init__(self):
        _check_rho(self.rho)
        _check_level("m", self.m)
        _check_level("n", self.n)

    @property
    def L(self) -> int:
        return max(self.m, self.n)

    @property
    def S(self) -> int:
        return min(self.m, self.n)

    def probability(self, method: str = "jacobi",
                    max_log: float = DEFAULT_MAX_LOG) -> float:
        return transition_probability(self.weight, self.rho, self.m, self.n,
                                      method=method, max_log=max_log)


def _finish(log_pref, poly, max_log):
    if not np.all(np.abs(log_pref) <= max_log):
        raise LogMagnitudeOverflow(
            f"log-magnitude of prefactor exceeds bound {max_log:g}")
    if not np.all(np.isfinite(poly)):
        raise LogMagnitudeOverflow("polynomial factor overflowed")
    with np.errstate(divide="ignore"):
        return np.exp(log_pref + 2.0 * np.log(np.abs(poly)))


def transition_probability(weight: RepresentationWeight, rho: float, m: int, n: int,
                           *, method: str = "jacobi",
                           max_log: float = DEFAULT_MAX_LOG) -> float:
    """Probability w_mn of the transition |m> -> |n>."""
    rho = _check_rho(rho)
    m = _check_level("m", m)
    n = _check_level("n", n)
    if method not in METHODS:
        raise DomainError(f"method must be one of {METHODS}, got {method!r}")
    L, S = max(m, n), min(m, n)
    if rho == 0.0:
        return 1.0 if L == S else 0.0
    tj = weight.two_j
    log_rho = (L - S) * math.log(rho) + tj * math.log1p(-rho)

    if method == "hypergeometric":
        log_pref = (math.lgamma(L + 1) - 2.0 * math.lgamma(L - S + 1)
                    - math.lgamma(S + 1) + math.lgamma(L + tj)
                    - math.lgamma(S + tj) + log_rho)
        poly = terminating_2f1(S, L, tj, rho)
    else:
        # n >= m: m!/n! Gamma(n+2j)/Gamma(m+2j), degree m; mirror for m >= n
        log_pref = (math.lgamma(S + 1) - math.lgamma(L + 1)
                    + math.lgamma(L + tj) - math.lgamma(S + tj) + log_rho)
        poly = _jacobi_scalar(S, L - S, tj, rho)
    return float(_finish(log_pref, poly, max_log))


def transition_row(weight: RepresentationWeight, rho: float, m: int, n_max: int,
                   *, max_log: float = DEFAULT_MAX_LOG) -> np.ndarray:
    """Vectorized Jacobi-route row ``[w_m0, ..., w_m,n_max]``."""
    rho = _check_rho(rho)
    m = _check_level("m", m)
    n_max = _check_level("n_max", n_max)
    n = np.arange(n_max + 1)
    if rho == 0.0:
        return (n == m).astype(float)
    tj = weight.two_j
    out = np.empty(n_max + 1)

    lo = n[n < m]
    for k in lo:
        out[k] = transition_probability(weight, rho, m, int(k), max_log=max_log)

    hi = n[n >= m]
    if hi.size:
        log_pref = (gammaln(m + 1) - gammaln(hi + 1) + gammaln(hi + tj)
                    - gammaln(m + tj) + (hi - m) * math.log(rho)
                    + tj * math.log1p(-rho))
        poly = _jacobi_checked(m, (hi - m).astype(float), tj, rho)
        out[hi] = _finish(log_pref, poly, max_log)
    return out


@dataclass
class TransitionTable:
    """Probabilities ``w[m, n]`` with per-row unitarity residuals.

    ``row_residuals[m]`` is ``|1 - (sum_n w_mn + tail_m)|`` where ``tail_m`` is
    the geometric estimate of the probability beyond ``n_extent[m]``.
    """

    weight: RepresentationWeight
    rho: float
    m_max: int
    n_max: int
    w: np.ndarray
    row_residuals: np.ndarray
    tails: np.ndarray = field(default_factory=lambda: np.zeros(0))
    n_extent: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def first_moments(self) -> np.ndarray:
        """sum_n (n + j) w_mn per row over the stored extent."""
        n = np.arange(self.n_max + 1)
        return self.w @ (n + self.weight.j)


def _tail_estimate(row):
    # geometric continuation beyond the last entry; ratio must be past the peak
    if len(row) < 2:
        return math.inf, 1.0
    a, b = row[-2], row[-1]
    if a <= 0.0:
        return (0.0 if b == 0.0 else math.inf), 0.0
    r = b / a
    if r >= 1.0:
        return math.inf, r
    return b * r / (1.0 - r), r


def default_tail_cap(m_max: int, rho: float, tail_eps: float = DEFAULT_TAIL_EPS) -> int:
    """Largest admissible row extent under the tail policy.

    The row distribution has mean (m + j)(1 + rho)/(1 - rho) - j and decays
    like rho^n, so the cap scales with (m_max + 1)/(1 - rho) plus the
    log(eps)/log(rho) <= |log eps|/(1 - rho) steps the tail needs to decay.
    """
    return int(math.ceil((10.0 * (m_max + 1) + 2.0 * abs(math.log(tail_eps)))
                         / (1.0 - rho))) + 50


def build_table(weight: RepresentationWeight, rho: float, m_max: int,
                n_max: int | None = None, *, tail_eps: float = DEFAULT_TAIL_EPS,
                cap: int | None = None,
                max_log: float = DEFAULT_MAX_LOG) -> TransitionTable:
    """Fill the transition table for rows ``m = 0 .. m_max``.

    With ``n_max`` given the extent is fixed.  Otherwise each row is grown
    until the geometric tail bound drops below ``tail_eps``; exceeding
    ``cap`` raises :class:`TailCapError`.
    """
    rho = _check_rho(rho)
    m_max = _check_level("m_max", m_max)

    if n_max is not None:
        n_max = _check_level("n_max", n_max)
        rows = _fixed_rows(weight, rho, m_max, n_max, max_log)
        extents = np.full(m_max + 1, n_max)
    else:
        if cap is None:
            cap = default_tail_cap(m_max, rho, tail_eps)
        rows, ext = [], []
        for m in range(m_max + 1):
            row = _grow_row(weight, rho, m, tail_eps, cap, max_log)
            rows.append(row)
            ext.append(len(row) - 1)
        extents = np.array(ext)
        n_max = int(extents.max())
        rows = [r if len(r) == n_max + 1 else
                transition_row(weight, rho, m, n_max, max_log=max_log)
                for m, r in enumerate(rows)]

    w = np.vstack(rows)
    tails = np.empty(m_max + 1)
    resid = np.empty(m_max + 1)
    for m in range(m_max + 1):
        row = w[m, :extents[m] + 1]
        tails[m] = _tail_estimate(row)[0] if rho > 0 else 0.0
        resid[m] = abs(1.0 - (math.fsum(row) + tails[m]))
    return TransitionTable(weight, rho, m_max, n_max, w, resid, tails, extents)


def _fixed_rows(weight, rho, m_max, n_max, max_log):
    # upper triangle (n >= m) vectorized per row, lower triangle by w_mn = w_nm
    if n_max < m_max or rho == 0.0:
        return [transition_row(weight, rho, m, n_max, max_log=max_log)
                for m in range(m_max + 1)]
    w = np.zeros((m_max + 1, n_max + 1))
    tj = weight.two_j
    for m in range(m_max + 1):
        hi = np.arange(m, n_max + 1)
        log_pref = (gammaln(m + 1) - gammaln(hi + 1) + gammaln(hi + tj)
                    - gammaln(m + tj) + (hi - m) * math.log(rho)
                    + tj * math.log1p(-rho))
        poly = _jacobi_checked(m, (hi - m).astype(float), tj, rho)
        w[m, m:] = _finish(log_pref, poly, max_log)
        w[m, :m] = w[:m, m]
    return list(w)


def _grow_row(weight, rho, m, tail_eps, cap, max_log):
    if rho == 0.0:
        return transition_row(weight, rho, m, m + 1)
    # start near the row mean and double until the tail bound is small
    mean = (m + weight.j) * (1.0 + rho) / (1.0 - rho)
    n_hi = max(m + 8, int(2 * mean) + 8)
    while True:
        n_hi = min(n_hi, cap)
        row = transition_row(weight, rho, m, n_hi, max_log=max_log)
        tail, r = _tail_estimate(row)
        if r < 1.0 and tail < tail_eps and row[-1] < tail_eps:
            return row
        if n_hi >= cap:
            raise TailCapError(
                f"row m={m}: extent cap {cap} reached with tail {tail:.3e} "
                f"(rho={rho}, eps={tail_eps:g})")
        n_hi *= 2
