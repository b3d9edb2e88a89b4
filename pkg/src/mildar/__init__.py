"""Simulation and verification toolkit for the mildly-explosive AR(1) model
driven by a mildly-explosive AR(1) error.

    X_k = theta_n X_{k-1} + eps_k,    eps_k = rho_n eps_{k-1} + V_k,

with |theta_n| = 1 + gamma1/k_n, |rho_n| = 1 + gamma2/k_n and k_n = n**alpha.
"""

from mildar.estimation import EstimateResult, ZeroDenominatorError, estimate
from mildar.functionals import FunctionalSet, functionals
from mildar.identities import IdentityReport, verify_path
from mildar.limits import (
    BranchMismatch,
    CauchyRef,
    TheoremBranch,
    cauchy_reference,
    ks_distance,
    normalized_statistic,
)
from mildar.model import ModelConfig, Noise, Regime, SamplePath, effective_params, simulate

__all__ = [
    "BranchMismatch",
    "CauchyRef",
    "EstimateResult",
    "FunctionalSet",
    "IdentityReport",
    "ModelConfig",
    "Noise",
    "Regime",
    "SamplePath",
    "TheoremBranch",
    "ZeroDenominatorError",
    "cauchy_reference",
    "effective_params",
    "estimate",
    "functionals",
    "ks_distance",
    "normalized_statistic",
    "simulate",
    "verify_path",
]

__version__ = "0.1.0"
