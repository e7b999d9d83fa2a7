"""Transition probabilities of the time-dependent singular oscillator.

The Hamiltonian p^2/2 + omega(t)^2 x^2/2 + g/(8 x^2) on x > 0 is a linear
combination of su(1,1) generators, so transitions between asymptotic levels
depend only on the representation weight j and one classical number rho.
"""
from .algebra import (
    RepresentationWeight,
    TruncatedRep,
    build_truncated_rep,
    hamiltonian_decomposition,
    verify_casimir,
    verify_commutators,
    weight_from_coupling,
    weight_from_j,
    wigner_boost_oracle,
)
from .classical import FrequencyProfile, ReflectionResult, compute_rho, evaluate_profile, sudden_rho
from .errors import (
    BranchError,
    ConfigError,
    DimensionError,
    DomainError,
    IntegrationError,
    LogMagnitudeOverflow,
    NumericalError,
    PlateauError,
    SingOscError,
    TailCapError,
)
from .genfunc import adiabatic_ratio, generating_function, nu, row_generating_checks
from .transitions import (
    TransitionQuery,
    TransitionTable,
    build_table,
    energy_level,
    jacobi_polynomial,
    terminating_2f1,
    transition_probability,
)

__version__ = "0.1.0"
