"""Generating function G(u, v) = sum_{m,n} w_mn u^m v^n and its moments.

Closed form:

    G(u, v) = nu^(2j) / (1 - u v nu^2),
    nu = 2(1 - rho) / (D + sqrt(D^2 - 4 u v (1 - rho)^2)),
    D  = 1 - rho (u + v) + u v.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .algebra import RepresentationWeight
from .errors import BranchError, DomainError
from .report import Check
from .transitions import build_table, transition_row

__all__ = [
    "nu",
    "generating_function",
    "series_order",
    "series_sum",
    "taylor_coefficient_u",
    "row_generating_checks",
    "default_difference_step",
    "adiabatic_ratio",
    "moment_ratio",
]


def _check_args(u, v, rho):
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho!r}")
    if not (abs(u) < 1 and abs(v) < 1):
        raise DomainError(f"need |u|, |v| < 1, got u={u!r}, v={v!r}")
    return rho


def _is_real(*xs):
    return all(isinstance(x, (int, float, np.floating, np.integer)) for x in xs)


def nu(u, v, rho):
    """Principal-branch nu(u, v; rho); complex inputs give a complex result."""
    rho = _check_args(u, v, rho)
    d = 1.0 - rho * (u + v) + u * v
    rad = d * d - 4.0 * u * v * (1.0 - rho) ** 2
    if _is_real(u, v):
        if rad < 0:
            raise BranchError(f"negative radicand {rad!r} at u={u}, v={v}, rho={rho}")
        val = 2.0 * (1.0 - rho) / (d + math.sqrt(rad))
        if not val > 0:
            raise BranchError(f"nu={val!r} not positive at u={u}, v={v}, rho={rho}")
    else:
        val = 2.0 * (1.0 - rho) / (d + cmath.sqrt(rad))
    if abs(u * v * val * val) >= 1.0:
        raise BranchError(f"|uv nu^2| >= 1 at u={u}, v={v}, rho={rho}")
    return val


def generating_function(weight: RepresentationWeight, rho, u, v):
    """G(u, v) for the representation ``weight`` at reflection parameter ``rho``."""
    x = nu(u, v, rho)
    if isinstance(x, complex):
        return cmath.exp(weight.two_j * cmath.log(x)) / (1.0 - u * v * x * x)
    return math.exp(weight.two_j * math.log(x)) / (1.0 - u * v * x * x)


def series_order(u, v, eps=1e-12) -> int:
    """Truncation order N with sum over max(m, n) > N bounded by ``eps``.

    Rows and columns of w each sum to one, so the discarded part is at most
    2 q^(N+1) / (1 - q) with q = max(|u|, |v|).
    """
    q = max(abs(u), abs(v))
    if not q < 1:
        raise DomainError(f"need |u|, |v| < 1, got u={u!r}, v={v!r}")
    if q == 0:
        return 0
    return max(1, int(math.ceil(math.log(eps * (1 - q) / 2) / math.log(q))))


def series_sum(weight: RepresentationWeight, rho, u, v, order=None, eps=1e-12,
               table=None):
    """Direct double sum of w_mn u^m v^n for m, n <= order.

    A square ``table`` from :func:`build_table` may be passed to share the
    transition probabilities across many (u, v) points; ``order`` then
    defaults to its size.
    """
    if table is None:
        if order is None:
            order = series_order(u, v, eps)
        table = build_table(weight, rho, order, order)
    elif order is None:
        order = min(table.m_max, table.n_max)
    w = table.w[:order + 1, :order + 1]
    um = np.power(complex(u) if not _is_real(u) else float(u), np.arange(order + 1))
    vn = np.power(complex(v) if not _is_real(v) else float(v), np.arange(order + 1))
    return um @ w @ vn


def taylor_coefficient_u(weight: RepresentationWeight, rho, m, v, h=1e-2,
                         levels=3):
    """m-th Taylor coefficient in u of G(u, v) at u = 0.

    Central m-th difference with steps h, h/2, ... combined by Richardson
    extrapolation in h^2.  Roundoff grows like eps / h^m, so the default
    step is reliable up to about m = 2; pass a larger ``h`` for higher m.
    """
    m = int(m)
    if m == 0:
        return generating_function(weight, rho, 0.0, v)
    coef = [(-1) ** k * math.comb(m, k) for k in range(m + 1)]
    est = []
    for i in range(levels):
        hi = h / 2 ** i
        s = math.fsum(c * generating_function(weight, rho, (0.5 * m - k) * hi, v)
                      for k, c in enumerate(coef))
        est.append(s / hi ** m / math.factorial(m))
    for k in range(1, levels):
        f = 4.0 ** k
        est = [(f * est[i + 1] - est[i]) / (f - 1.0) for i in range(len(est) - 1)]
    return est[0]


def _row_series(weight, rho, m, v, eps=1e-13):
    order = max(m + 1, series_order(0.0, v, eps))
    row = transition_row(weight, rho, m, order)
    return float(np.polynomial.polynomial.polyval(v, row))


def default_difference_step(m):
    """(h, levels) for :func:`taylor_coefficient_u`.

    Small steps suffice for m <= 2.  Beyond that roundoff (~eps/h^m)
    dominates, so the step grows and more Richardson levels remove the
    truncation error; the widest stencil point stays at |u| <= 0.9.
    Attainable accuracy is about 1e-11 at m = 3, 1e-9 at m = 4, 1e-7 at m = 5.
    """
    if m <= 2:
        return 1e-2, 3
    return min(0.3, 1.8 / m), 5


def row_generating_checks(weight: RepresentationWeight, rho, m, v_samples,
                          tol=1e-9, h=None, levels=None) -> Check:
    """Compare sum_n w_mn v^n with the u^m coefficient of G(u, v)."""
    dh, dl = default_difference_step(m)
    h = dh if h is None else h
    levels = dl if levels is None else levels
    res = {}
    for v in v_samples:
        direct = _row_series(weight, rho, m, v)
        coef = taylor_coefficient_u(weight, rho, m, v, h=h, levels=levels)
        res[repr(float(v))] = abs(direct - coef)
    return Check(f"row_genfunc[m={m}]", max(res.values(), default=0.0), tol,
                 {"rho": rho, "j": weight.j, "m": m, "residuals": res})


def adiabatic_ratio(rho) -> float:
    """I+/I- = (1 + rho)/(1 - rho)."""
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho!r}")
    return (1.0 + rho) / (1.0 - rho)


def moment_ratio(weight: RepresentationWeight, rho, m, tail_eps=1e-13) -> float:
    """sum_n (n + j) w_mn / (m + j) from the transition table."""
    table = build_table(weight, rho, m, tail_eps=tail_eps)
    ext = int(table.n_extent[m])
    n = np.arange(ext + 1)
    return math.fsum((n + weight.j) * table.w[m, :ext + 1]) / (m + weight.j)
