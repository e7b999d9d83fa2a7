"""Invariant suites run by ``singosc verify``.

Every suite returns a :class:`~singosc.report.Check`; the residual is the
worst case over the suite's parameter grid and ``details`` records where it
occurred.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import algebra, classical, genfunc, transitions
from .errors import NumericalError, SingOscError
from .report import Check


@dataclass
class VerifySettings:
    j_values: list[float] = field(default_factory=lambda: [0.55, 0.75, 1.0, 1.5, 3.0])
    dim: int = 200
    algebra_tol: float = 1e-12
    dual_levels: int = 30
    dual_rhos: list[float] = field(
        default_factory=lambda: [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95])
    dual_tol: float = 1e-11
    unitarity_m_max: int = 20
    unitarity_rhos: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    unitarity_tol: float = 1e-10
    stress_rhos: list[float] = field(default_factory=list)
    oracle_dim: int = 200
    oracle_levels: int = 10
    oracle_rhos: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5])
    oracle_j_values: list[float] = field(default_factory=lambda: [0.75, 1.5])
    oracle_tol: float = 1e-8
    moment_levels: list[int] = field(default_factory=lambda: [0, 2, 5, 10])
    moment_rhos: list[float] = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.8])
    moment_j_values: list[float] = field(default_factory=lambda: [0.75, 1.5])
    moment_tol: float = 1e-8
    genfunc_grid: list[float] = field(
        default_factory=lambda: [-0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7])
    genfunc_rhos: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7])
    genfunc_j_values: list[float] = field(default_factory=lambda: [0.75, 1.0, 1.5])
    genfunc_tol: float = 1e-9
    rho_tol: float = 1e-4
    wronskian_tol: float = 1e-9
    override_tol: float | None = None

    def tol(self, value: float) -> float:
        return value if self.override_tol is None else self.override_tol


def check_spectrum(s: VerifySettings) -> Check:
    worst = 0.0
    for g in (0.0, 3.0):
        wt = algebra.weight_from_coupling(g)
        for omega in (1.0, 2.0):
            for n in range(11):
                expected = 2.0 * omega * (n + wt.j)
                worst = max(worst, abs(transitions.energy_level(n, omega, wt) - expected))
    e0 = transitions.energy_level(0, 1.0, algebra.weight_from_coupling(0.0))
    worst = max(worst, abs(e0 - 1.5))
    return Check("spectrum", worst, s.tol(1e-15),
                 {"E_0(g=0, omega=1)": e0})


def check_algebra(s: VerifySettings) -> list[Check]:
    # Closure is checked in extended precision; double-precision residuals
    # (~eps * dim^2) are reported alongside for reference.
    comm, cas, comm64, cas64 = [], [], [], []
    for j in s.j_values:
        wt = algebra.weight_from_j(j)
        rep = algebra.build_truncated_rep(wt, s.dim, dtype=np.clongdouble)
        comm.append(algebra.verify_commutators(rep).residual)
        cas.append(algebra.verify_casimir(rep).residual)
        rep = algebra.build_truncated_rep(wt, s.dim)
        comm64.append(algebra.verify_commutators(rep).residual)
        cas64.append(algebra.verify_casimir(rep).residual)
    tol = s.tol(s.algebra_tol)
    keys = list(map(repr, s.j_values))
    return [
        Check("commutators", max(comm), tol,
              {"dim": s.dim, "per_j": dict(zip(keys, comm)),
               "double_precision": dict(zip(keys, comm64))}),
        Check("casimir", max(cas), tol,
              {"dim": s.dim, "per_j": dict(zip(keys, cas)),
               "double_precision": dict(zip(keys, cas64))}),
    ]


def check_dual_formula(s: VerifySettings) -> Check:
    worst, where = 0.0, None
    for j in s.j_values:
        wt = algebra.weight_from_j(j)
        for rho in s.dual_rhos:
            for m in range(s.dual_levels + 1):
                for n in range(s.dual_levels + 1):
                    a = transitions.transition_probability(wt, rho, m, n, method="hypergeometric")
                    b = transitions.transition_probability(wt, rho, m, n, method="jacobi")
                    d = abs(a - b) / max(a, 1e-300)
                    if d > worst:
                        worst, where = d, {"j": j, "rho": rho, "m": m, "n": n}
    return Check("dual_formula", worst, s.tol(s.dual_tol), {"worst_at": where})


def check_unitarity(s: VerifySettings) -> Check:
    worst, where, failures = 0.0, None, []
    rhos = list(s.unitarity_rhos) + list(s.stress_rhos)
    for j in s.j_values:
        wt = algebra.weight_from_j(j)
        for rho in rhos:
            try:
                tab = transitions.build_table(wt, rho, s.unitarity_m_max,
                                              tail_eps=s.unitarity_tol / 10)
            except NumericalError as exc:
                failures.append({"j": j, "rho": rho, "error": str(exc)})
                continue
            r = float(tab.row_residuals.max())
            if r > worst:
                worst, where = r, {"j": j, "rho": rho, "n_max": tab.n_max}
    details = {"worst_at": where}
    if failures:
        details["failures"] = failures
        worst = math.inf
    return Check("unitarity", worst, s.tol(s.unitarity_tol), details)


def check_oracle(s: VerifySettings) -> Check:
    worst, where = 0.0, None
    k = s.oracle_levels
    sq = 0.0
    for j in s.oracle_j_values:
        wt = algebra.weight_from_j(j)
        for rho in s.oracle_rhos:
            prob = algebra.wigner_boost_oracle(wt, rho, s.oracle_dim)
            tab = transitions.build_table(wt, rho, k, k)
            d = float(np.max(np.abs(prob[:k + 1, :k + 1].T - tab.w)))
            if d > worst:
                worst, where = d, {"j": j, "rho": rho}
            sq = max(sq, algebra.boost_squaring_residual(wt, rho, s.oracle_dim))
    return Check("wigner_oracle", worst, s.tol(s.oracle_tol),
                 {"worst_at": where, "dim": s.oracle_dim, "squaring_residual": sq})


def check_moments(s: VerifySettings) -> Check:
    worst, where = 0.0, None
    for j in s.moment_j_values:
        wt = algebra.weight_from_j(j)
        for rho in s.moment_rhos:
            target = genfunc.adiabatic_ratio(rho)
            for m in s.moment_levels:
                d = abs(genfunc.moment_ratio(wt, rho, m) - target)
                if d > worst:
                    worst, where = d, {"j": j, "rho": rho, "m": m}
    return Check("adiabatic_moment", worst, s.tol(s.moment_tol), {"worst_at": where})


def check_genfunc(s: VerifySettings) -> Check:
    grid = s.genfunc_grid
    q = max(abs(x) for x in grid)
    order = genfunc.series_order(q, q, eps=s.genfunc_tol / 100)
    worst, where = 0.0, None
    for j in s.genfunc_j_values:
        wt = algebra.weight_from_j(j)
        for rho in s.genfunc_rhos:
            tab = transitions.build_table(wt, rho, order, order)
            for u in grid:
                for v in grid:
                    d = abs(genfunc.generating_function(wt, rho, u, v)
                            - genfunc.series_sum(wt, rho, u, v, table=tab))
                    if d > worst:
                        worst, where = d, {"j": j, "rho": rho, "u": u, "v": v}
    return Check("genfunc_series", worst, s.tol(s.genfunc_tol),
                 {"worst_at": where, "order": order})


def check_rho_pipeline(s: VerifySettings) -> list[Check]:
    const = classical.compute_rho(classical.FrequencyProfile("constant", 1.5, 1.5))
    fast = classical.compute_rho(classical.FrequencyProfile("tanh-ramp", 1.0, 3.0, T=1e-3))
    sudden = classical.sudden_rho(1.0, 3.0)
    ramps = [classical.compute_rho(classical.FrequencyProfile("tanh-ramp", 1.0, 3.0, T=T))
             for T in (0.5, 1.0, 2.0, 4.0)]
    rhos = [r.rho for r in ramps]
    # residual = -(smallest decrease): negative iff rho strictly decreases in T
    gaps = [a - b for a, b in zip(rhos[:-1], rhos[1:])]
    drift = max(r.wronskian_drift for r in [const, fast, *ramps])
    return [
        Check("rho_constant", const.rho, s.tol(1e-12)),
        Check("rho_sudden_limit", abs(fast.rho - sudden), s.tol(s.rho_tol),
              {"rho": fast.rho, "sudden": sudden}),
        Check("rho_wronskian", drift, s.tol(s.wronskian_tol)),
        Check("rho_monotone", -min(gaps), 0.0,
              {"T": [0.5, 1.0, 2.0, 4.0], "rho": rhos}),
    ]


def _guard(name, fn, s):
    # a suite that raises is reported as a failed check, not an abort
    try:
        out = fn(s)
    except SingOscError as exc:
        return [Check(name, math.inf, 0.0, {"error": f"{type(exc).__name__}: {exc}"})]
    return out if isinstance(out, list) else [out]


SUITES = [
    ("spectrum", check_spectrum),
    ("algebra", check_algebra),
    ("dual_formula", check_dual_formula),
    ("unitarity", check_unitarity),
    ("wigner_oracle", check_oracle),
    ("rho_pipeline", check_rho_pipeline),
    ("genfunc_series", check_genfunc),
    ("adiabatic_moment", check_moments),
]


def run_all(s: VerifySettings | None = None) -> list[Check]:
    s = s or VerifySettings()
    checks = []
    for name, fn in SUITES:
        checks += _guard(name, fn, s)
    return checks
