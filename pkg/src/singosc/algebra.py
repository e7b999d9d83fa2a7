"""Truncated su(1,1) discrete-series representation.

The instantaneous eigenstates of the singular oscillator carry the lowest
weight representation D+(j) of su(1,1).  On the basis |n>, n = 0, 1, ...

    J3 |n>  = (n + j) |n>
    J+ |n>  = sqrt((n + 1)(n + 2j)) |n + 1>
    J- |n>  = sqrt(n (n - 1 + 2j)) |n - 1>

with J1 = (J+ + J-)/2 and J2 = (J+ - J-)/(2i).  Truncating to n < N leaves
the commutators and the Casimir exact on every row except the last, so all
identity checks are restricted to an interior block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DimensionError, DomainError
from .report import Check

__all__ = [
    "RepresentationWeight",
    "TruncatedRep",
    "weight_from_coupling",
    "weight_from_j",
    "build_truncated_rep",
    "verify_commutators",
    "verify_casimir",
    "hamiltonian_decomposition",
    "boost_matrix",
    "wigner_boost_oracle",
    "boost_squaring_residual",
]


@dataclass(frozen=True)
class RepresentationWeight:
    """Coupling ``g`` of the 1/x^2 term and the su(1,1) weight ``j``."""

    g: float
    j: float

    def __post_init__(self):
        if not (math.isfinite(self.g) and self.g > -1.0):
            raise DomainError(f"coupling g must satisfy g > -1, got {self.g!r}")
        if not self.j > 0.5:
            raise DomainError(f"weight j must exceed 1/2, got {self.j!r}")

    @property
    def two_j(self) -> float:
        return 2.0 * self.j

    @property
    def casimir(self) -> float:
        """Eigenvalue j(j-1) of J3^2 - J1^2 - J2^2."""
        return self.j * (self.j - 1.0)

    @property
    def casimir_from_coupling(self) -> float:
        return (self.g - 3.0) / 16.0


def weight_from_coupling(g: float) -> RepresentationWeight:
    """Return the representation weight ``j = 1/2 + sqrt(1 + g)/4``.

    Raises :class:`DomainError` for ``g <= -1``.
    """
    g = float(g)
    if not (math.isfinite(g) and g > -1.0):
        raise DomainError(f"coupling g must satisfy g > -1, got {g!r}")
    return RepresentationWeight(g=g, j=0.5 + 0.25 * math.sqrt(1.0 + g))


def weight_from_j(j: float) -> RepresentationWeight:
    """Inverse of :func:`weight_from_coupling`; keeps ``j`` exactly as given."""
    j = float(j)
    if not (math.isfinite(j) and j > 0.5):
        raise DomainError(f"weight j must exceed 1/2, got {j!r}")
    return RepresentationWeight(g=16.0 * (j - 0.5) ** 2 - 1.0, j=j)


@dataclass(frozen=True, eq=False)
class TruncatedRep:
    """Generators J1, J2, J3 restricted to levels ``0 .. dim-1``.

    ``interior`` is the size of the leading block on which truncation does
    not disturb quadratic expressions in the generators.
    """

    weight: RepresentationWeight
    dim: int
    J1: np.ndarray
    J2: np.ndarray
    J3: np.ndarray
    interior: int

    @property
    def J_plus(self) -> np.ndarray:
        return self.J1 + 1j * self.J2

    @property
    def J_minus(self) -> np.ndarray:
        return self.J1 - 1j * self.J2


def _raising_elements(j: float, dim: int, real=float) -> np.ndarray:
    # <n+1|J+|n> for n = 0 .. dim-2
    n = np.arange(dim - 1, dtype=real)
    return np.sqrt((n + 1) * (n + 2 * real(j)))


def build_truncated_rep(weight: RepresentationWeight, dim: int,
                        interior: int | None = None,
                        dtype=np.complex128) -> TruncatedRep:
    """Build the N x N matrices of J1, J2, J3 on the lowest-weight basis.

    The matrix elements are square roots, so in double precision the
    quadratic identities only hold to about ``eps * dim**2`` (~1e-11 at
    dim 200).  ``dtype=np.clongdouble`` builds the matrices in extended
    precision where the platform provides it.
    """
    dim = int(dim)
    if dim < 4:
        raise DimensionError(f"dim must be at least 4, got {dim}")
    if interior is None:
        interior = dim - 2
    if not 1 <= interior <= dim - 2:
        raise DimensionError(f"interior must lie in [1, dim-2], got {interior}")

    dtype = np.dtype(dtype)
    if dtype.kind != "c":
        raise DomainError(f"dtype must be complex, got {dtype}")
    real = np.zeros(0, dtype).real.dtype.type
    up = _raising_elements(weight.j, dim, real)
    jp = np.diag(up, k=-1).astype(dtype)
    jm = jp.T.copy()
    J1 = (jp + jm) / 2
    J2 = (jp - jm) * dtype.type(-0.5j)
    J3 = np.diag(np.arange(dim, dtype=real) + real(weight.j)).astype(dtype)
    return TruncatedRep(weight, dim, J1, J2, J3, int(interior))


def _comm(a, b):
    return a @ b - b @ a


def _block_norm(mat, k):
    return float(np.max(np.abs(mat[:k, :k])))


def verify_commutators(rep: TruncatedRep, tol: float = 1e-12,
                       interior: int | None = None) -> Check:
    """Max-norm residuals of [J1,J2] = -iJ3, [J2,J3] = iJ1, [J3,J1] = iJ2.

    ``interior`` overrides ``rep.interior`` (values up to ``rep.dim`` are
    accepted so the truncation edge can be inspected).
    """
    k = rep.interior if interior is None else int(interior)
    J1, J2, J3 = rep.J1, rep.J2, rep.J3
    res = {
        "[J1,J2]+iJ3": _block_norm(_comm(J1, J2) + 1j * J3, k),
        "[J2,J3]-iJ1": _block_norm(_comm(J2, J3) - 1j * J1, k),
        "[J3,J1]-iJ2": _block_norm(_comm(J3, J1) - 1j * J2, k),
    }
    return Check("commutators", max(res.values()), tol,
                 {"j": rep.weight.j, "dim": rep.dim, "interior": k, **res})


def verify_casimir(rep: TruncatedRep, tol: float = 1e-12,
                   interior: int | None = None) -> Check:
    """Residual of J3^2 - J1^2 - J2^2 - j(j-1) I on the interior block."""
    k = rep.interior if interior is None else int(interior)
    J1, J2, J3 = rep.J1, rep.J2, rep.J3
    c = J3 @ J3 - J1 @ J1 - J2 @ J2
    j = c.real.dtype.type(rep.weight.j)
    resid = _block_norm(c - j * (j - 1) * np.eye(rep.dim, dtype=c.dtype), k)
    return Check("casimir", resid, tol,
                 {"j": rep.weight.j, "dim": rep.dim, "interior": k,
                  "casimir": rep.weight.casimir})


def hamiltonian_decomposition(weight: RepresentationWeight, omega_t: float,
                              omega_plus: float, rep: TruncatedRep) -> np.ndarray:
    """H(t) = (w+ + w(t)^2/w+) J3 + (w+ - w(t)^2/w+) J1 in the w+ basis."""
    if not omega_plus > 0:
        raise DomainError(f"omega_plus must be positive, got {omega_plus!r}")
    if rep.weight != weight:
        raise DomainError("representation was built for a different weight")
    r = omega_t ** 2 / omega_plus
    return (omega_plus + r) * rep.J3 + (omega_plus - r) * rep.J1


def _check_rho(rho):
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        raise DomainError(f"rho must lie in [0, 1), got {rho!r}")
    return rho


def boost_matrix(weight: RepresentationWeight, rho: float, dim: int) -> np.ndarray:
    """Truncated boost exp(-beta (J+ - J-)/2) with tanh^2(beta/2) = rho.

    The generator is real antisymmetric, so the result is a real orthogonal
    matrix.  Rows/columns near ``dim`` are contaminated by truncation.
    """
    rho = _check_rho(rho)
    dim = int(dim)
    if dim < 4:
        raise DimensionError(f"dim must be at least 4, got {dim}")
    beta = 2.0 * math.atanh(math.sqrt(rho))
    up = _raising_elements(weight.j, dim)
    gen = np.diag(up, k=-1) - np.diag(up, k=1)   # J+ - J-
    return expm(-0.5 * beta * gen)


def wigner_boost_oracle(weight: RepresentationWeight, rho: float,
                        dim: int) -> np.ndarray:
    """Squared boost matrix elements; entry ``[n, m]`` approximates w_mn.

    Reliable for m, n <= dim/4 at moderate rho (dim = 200 is ample for
    rho <= 0.6); larger rho needs a larger ``dim``.
    """
    w = boost_matrix(weight, rho, dim)
    return w * w


def boost_squaring_residual(weight: RepresentationWeight, rho: float,
                            dim: int) -> float:
    """Max |B(beta/2)^2 - B(beta)|, an accuracy probe for the exponential."""
    rho = _check_rho(rho)
    full = boost_matrix(weight, rho, dim)
    half_rho = math.tanh(0.5 * math.atanh(math.sqrt(rho))) ** 2
    half = boost_matrix(weight, half_rho, dim)
    return float(np.max(np.abs(half @ half - full)))
