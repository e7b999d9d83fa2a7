"""Reflection parameter rho from the classical equation xi'' + omega(t)^2 xi = 0.

The solution launched as the pure positive-frequency wave exp(-i w- t) on the
left plateau is decomposed on the right plateau as

    xi(t) = c1 exp(-i w+ t) + c2 exp(+i w+ t),

and ``rho = |c2 / c1|^2``.  Flux conservation, |c1|^2 - |c2|^2 = w-/w+, keeps
rho strictly below one.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, IntegrationError, PlateauError

__all__ = [
    "PROFILE_KINDS",
    "FrequencyProfile",
    "ReflectionResult",
    "evaluate_profile",
    "compute_rho",
    "sudden_rho",
    "tanh_ramp_rho",
    "load_profile_table",
]

PROFILE_KINDS = ("constant", "step", "tanh-ramp", "linear-ramp", "gaussian-bump",
                 "tabulated")
PLATEAU_TOL = 1e-8


@dataclass(frozen=True)
class FrequencyProfile:
    """A positive frequency function omega(t) with asymptotic plateaus.

    Parametric kinds (``T`` is the switching time scale):

    * ``constant``: omega = omega_minus (``omega_plus`` must match);
    * ``step``: omega_minus for t < 0, omega_plus for t >= 0;
    * ``tanh-ramp``: omega^2 = (w-^2 + w+^2)/2 + (w+^2 - w-^2)/2 tanh(t/T);
    * ``linear-ramp``: omega linear from w- at t = -T/2 to w+ at t = T/2;
    * ``gaussian-bump``: the tanh-ramp frequency plus a exp(-(t/tau)^2).

    The ``tabulated`` kind interpolates ``table`` (an (N, 2) array of
    (t, omega) rows) with a monotone cubic; its plateaus are the end values.
    ``t_span`` may be left as ``None`` for parametric kinds, in which case a
    window on the plateaus is chosen automatically.
    """

    kind: str
    omega_minus: float = 1.0
    omega_plus: float = 1.0
    T: float = 1.0
    a: float = 0.0
    tau: float = 1.0
    table: np.ndarray | None = field(default=None, compare=False)
    t_span: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise DomainError(f"unknown profile kind {self.kind!r}; "
                              f"expected one of {PROFILE_KINDS}")
        if self.kind == "tabulated":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise DomainError("tabulated profile needs an (N>=2, 2) table")
            if np.any(np.diff(tab[:, 0]) <= 0):
                raise DomainError("tabulated t values must be strictly increasing")
            if np.any(tab[:, 1] <= 0) or not np.all(np.isfinite(tab)):
                raise DomainError("tabulated omega must be finite and positive")
            object.__setattr__(self, "table", tab)
            object.__setattr__(self, "omega_minus", float(tab[0, 1]))
            object.__setattr__(self, "omega_plus", float(tab[-1, 1]))
            if self.t_span is None:
                object.__setattr__(self, "t_span", (float(tab[0, 0]), float(tab[-1, 0])))
        if not (self.omega_minus > 0 and self.omega_plus > 0):
            raise DomainError("plateau frequencies must be positive")
        if self.kind == "constant" and self.omega_plus != self.omega_minus:
            raise DomainError("constant profile needs omega_plus == omega_minus")
        if self.kind in ("tanh-ramp", "linear-ramp", "gaussian-bump") and not self.T > 0:
            raise DomainError(f"switching time T must be positive, got {self.T!r}")
        if self.kind == "gaussian-bump":
            if not self.tau > 0:
                raise DomainError(f"bump width tau must be positive, got {self.tau!r}")
            if self.a <= -min(self.omega_minus, self.omega_plus):
                raise DomainError("bump amplitude would drive omega to zero or below")
        if self.t_span is not None:
            t0, t1 = map(float, self.t_span)
            if not t0 < t1:
                raise DomainError(f"t_span must be increasing, got {self.t_span!r}")
            object.__setattr__(self, "t_span", (t0, t1))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where omega(t) is not smooth; integration restarts there."""
        if self.kind == "step":
            return (0.0,)
        if self.kind == "linear-ramp":
            return (-0.5 * self.T, 0.5 * self.T)
        return ()

    @property
    def time_scale(self) -> float:
        if self.kind == "gaussian-bump":
            return max(self.T, self.tau)
        if self.kind in ("tanh-ramp", "linear-ramp"):
            return self.T
        return 1.0

    def __call__(self, t):
        return evaluate_profile(self, t)


def _interpolant(profile):
    return PchipInterpolator(profile.table[:, 0], profile.table[:, 1], extrapolate=False)


def evaluate_profile(profile: FrequencyProfile, t):
    """omega(t); accepts scalars or arrays."""
    wm, wp = profile.omega_minus, profile.omega_plus
    t_arr = np.asarray(t, dtype=float)
    kind = profile.kind
    if kind == "constant":
        out = np.full_like(t_arr, wm)
    elif kind == "step":
        out = np.where(t_arr < 0.0, wm, wp)
    elif kind in ("tanh-ramp", "gaussian-bump"):
        w2 = 0.5 * (wm * wm + wp * wp) + 0.5 * (wp * wp - wm * wm) * np.tanh(t_arr / profile.T)
        out = np.sqrt(w2)
        if kind == "gaussian-bump":
            out = out + profile.a * np.exp(-(t_arr / profile.tau) ** 2)
    elif kind == "linear-ramp":
        s = np.clip(t_arr / profile.T + 0.5, 0.0, 1.0)
        out = wm + (wp - wm) * s
    else:
        t0, t1 = profile.table[0, 0], profile.table[-1, 0]
        if np.any((t_arr < t0) | (t_arr > t1)):
            raise DomainError(f"t outside tabulated range [{t0}, {t1}]")
        out = _interpolant(profile)(t_arr)
    return float(out) if out.ndim == 0 else out


def sudden_rho(omega_minus: float, omega_plus: float) -> float:
    """Instantaneous-jump value ((w+ - w-)/(w+ + w-))^2."""
    if not (omega_minus > 0 and omega_plus > 0):
        raise DomainError("frequencies must be positive")
    return ((omega_plus - omega_minus) / (omega_plus + omega_minus)) ** 2


def tanh_ramp_rho(omega_minus: float, omega_plus: float, T: float) -> float:
    """Exact rho for the tanh ramp in omega^2.

    Same problem as above-barrier reflection off a Fermi-function step; the
    result reduces to :func:`sudden_rho` as T -> 0.
    """
    if not (omega_minus > 0 and omega_plus > 0 and T > 0):
        raise DomainError("frequencies and T must be positive")
    x = 0.5 * math.pi * T
    lo, hi = abs(omega_plus - omega_minus) * x, (omega_plus + omega_minus) * x
    # sinh(lo)/sinh(hi) computed without overflow
    if lo == 0:
        return 0.0
    log_ratio = (lo - hi) + math.log(-math.expm1(-2 * lo)) - math.log(-math.expm1(-2 * hi))
    return math.exp(2.0 * log_ratio)


def _plateau_residual(profile, t0, t1):
    wm, wp = profile.omega_minus, profile.omega_plus
    if profile.kind == "tabulated":
        # plateau <=> flat end segments of the table
        tab = profile.table
        return max(abs(tab[1, 1] - tab[0, 1]) / wm, abs(tab[-1, 1] - tab[-2, 1]) / wp)
    return max(abs(evaluate_profile(profile, t0) - wm) / wm,
               abs(evaluate_profile(profile, t1) - wp) / wp)


def auto_window(profile: FrequencyProfile, plateau_tol: float = PLATEAU_TOL
                ) -> tuple[float, float]:
    """Smallest doubling of ``5 * time_scale`` that puts both ends on plateaus."""
    if profile.t_span is not None:
        return profile.t_span
    if profile.kind in ("constant", "step"):
        return (-1.0, 1.0)
    half = 5.0 * profile.time_scale
    if profile.kind == "linear-ramp":
        return (-profile.T, profile.T)
    for _ in range(60):
        if _plateau_residual(profile, -half, half) < plateau_tol:
            return (-half, half)
        half *= 2.0
    raise PlateauError("could not find a window on the plateaus")


@dataclass(frozen=True)
class ReflectionResult:
    """rho with the Bogoliubov coefficients and integration diagnostics.

    ``invariant_ratio`` is the classical adiabatic-invariant ratio
    I+/I- = w+ (|c1|^2 + |c2|^2) / w-, computed from the trajectory and
    independent of how rho is formed.
    """

    rho: float
    c1: complex
    c2: complex
    wronskian_drift: float
    plateau_residual: float
    steps: int
    error_estimate: float
    flux_residual: float
    invariant_ratio: float
    t_span: tuple[float, float]

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "c1": [self.c1.real, self.c1.imag],
            "c2": [self.c2.real, self.c2.imag],
            "wronskian_drift": self.wronskian_drift,
            "plateau_residual": self.plateau_residual,
            "steps": self.steps,
            "error_estimate": self.error_estimate,
            "flux_residual": self.flux_residual,
            "invariant_ratio": self.invariant_ratio,
            "t_span": list(self.t_span),
        }


def _integrate(profile, t0, t1, rtol, atol):
    wm = profile.omega_minus
    # state: Re xi, Im xi, Re xi', Im xi'
    xi0 = complex(math.cos(wm * t0), -math.sin(wm * t0))
    y = np.array([xi0.real, xi0.imag, (-1j * wm * xi0).real, (-1j * wm * xi0).imag])

    edges = [t0] + [b for b in profile.breakpoints if t0 < b < t1] + [t1]
    max_step = 0.25 * min(profile.time_scale, 2 * math.pi / _max_omega(profile, t0, t1))
    steps, drift = 0, 0.0
    flux0 = y[0] * y[3] - y[1] * y[2]          # Im(conj(xi) xi') = -w-
    for a, b in zip(edges[:-1], edges[1:]):
        # stages landing on the right edge see the left-hand limit of omega
        b_in = math.nextafter(b, a)

        def rhs(t, s, b=b, b_in=b_in):
            w2 = evaluate_profile(profile, b_in if t >= b else t) ** 2
            return [s[2], s[3], -w2 * s[0], -w2 * s[1]]

        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol,
                        max_step=max_step)
        if sol.status != 0:
            raise IntegrationError(f"integration failed on [{a}, {b}]: {sol.message}")
        flux = sol.y[0] * sol.y[3] - sol.y[1] * sol.y[2]
        drift = max(drift, float(np.max(np.abs(flux - flux0))) / abs(flux0))
        steps += len(sol.t) - 1
        y = sol.y[:, -1]
    return complex(y[0], y[1]), complex(y[2], y[3]), drift, steps


def _max_omega(profile, t0, t1):
    ts = np.linspace(t0, t1, 2001)
    return float(np.max(evaluate_profile(profile, ts)))


def _project(profile, xi, dxi, t1):
    wp = profile.omega_plus
    c1 = complex(np.exp(1j * wp * t1)) * (xi + 1j * dxi / wp) / 2
    c2 = complex(np.exp(-1j * wp * t1)) * (xi - 1j * dxi / wp) / 2
    return c1, c2


def compute_rho(profile: FrequencyProfile, abs_tol: float = 1e-13,
                rel_tol: float = 1e-11, plateau_tol: float = PLATEAU_TOL
                ) -> ReflectionResult:
    """Integrate across the profile and extract rho = |c2/c1|^2.

    A second solve with tolerances tightened tenfold supplies
    ``error_estimate``.  Raises :class:`PlateauError` if the window ends are
    off the plateaus by more than ``plateau_tol`` (relative), and
    :class:`IntegrationError` if the solver fails.
    """
    if not (abs_tol > 0 and rel_tol > 0):
        raise DomainError("tolerances must be positive")
    t0, t1 = auto_window(profile, plateau_tol)
    presid = _plateau_residual(profile, t0, t1)
    if presid > plateau_tol:
        raise PlateauError(f"profile is off its plateaus at the window ends "
                           f"(residual {presid:.3e} > {plateau_tol:g})")

    xi, dxi, drift, steps = _integrate(profile, t0, t1, rel_tol, abs_tol)
    c1, c2 = _project(profile, xi, dxi, t1)
    rho = abs(c2) ** 2 / abs(c1) ** 2

    xi_f, dxi_f, _, _ = _integrate(profile, t0, t1, rel_tol / 10, abs_tol / 10)
    f1, f2 = _project(profile, xi_f, dxi_f, t1)
    rho_f = abs(f2) ** 2 / abs(f1) ** 2
    err = 2.0 * abs(rho - rho_f) + 4 * np.finfo(float).eps

    wm, wp = profile.omega_minus, profile.omega_plus
    a1, a2 = abs(c1) ** 2, abs(c2) ** 2
    return ReflectionResult(
        rho=float(rho), c1=c1, c2=c2, wronskian_drift=drift,
        plateau_residual=float(presid), steps=steps, error_estimate=float(err),
        flux_residual=float(abs(a1 - a2 - wm / wp) / (wm / wp)),
        invariant_ratio=float(wp * (a1 + a2) / wm), t_span=(t0, t1))


def load_profile_table(path: str | Path) -> np.ndarray:
    """Read a two-column (t, omega) CSV; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for i, rec in enumerate(csv.reader(fh)):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != 2:
                raise DomainError(f"{path}:{i + 1}: expected 2 columns, got {len(rec)}")
            try:
                rows.append((float(rec[0]), float(rec[1])))
            except ValueError:
                if i == 0 and not rows:
                    continue
                raise DomainError(f"{path}:{i + 1}: non-numeric entry {rec!r}") from None
    return np.array(rows, dtype=float).reshape(-1, 2)


def with_window(profile: FrequencyProfile, t_span) -> FrequencyProfile:
    return replace(profile, t_span=tuple(t_span))
