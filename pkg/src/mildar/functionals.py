"""Weighted noise sums xi, eta, phi and their covariance structure."""

from __future__ import annotations

import functools
import math
from dataclasses import astuple, dataclass

import numpy as np

from mildar.model import ModelConfig, SamplePath, draw_noise, effective_params, signed_powers
from mildar.rng import make_generator, replication_seed

NAMES = ("xi_theta", "eta_theta", "xi_rho", "eta_rho", "phi_theta")


@dataclass(frozen=True)
class FunctionalSet:
    xi_theta: float
    eta_theta: float
    xi_rho: float
    eta_rho: float
    phi_theta: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self))


@functools.lru_cache(maxsize=32)
def _weights(config: ModelConfig) -> np.ndarray:
    theta, rho, k_n = effective_params(config)
    n = config.n
    ell = np.arange(1, n + 1)
    back = n - ell + 1  # exponent of the eta weights
    w = np.empty((5, n))
    w[0] = signed_powers(theta, -ell)
    w[1] = signed_powers(theta, -back)
    w[2] = signed_powers(rho, -ell)
    w[3] = signed_powers(rho, -back)
    w[4] = back / n * w[0]
    w /= math.sqrt(k_n)
    w.flags.writeable = False
    return w


def weights(config: ModelConfig) -> np.ndarray:
    """Rows are the coefficients of V_1..V_n in xi_theta, eta_theta, xi_rho, eta_rho, phi_theta."""
    return _weights(config)


def functionals(path: SamplePath) -> FunctionalSet:
    values = weights(path.config) @ path.v
    return FunctionalSet(*(float(t) for t in values))


def functionals_batch(config: ModelConfig, noise: np.ndarray) -> np.ndarray:
    """Functionals for a stack of noise vectors of shape (R, n); returns (R, 5)."""
    return np.asarray(noise) @ weights(config).T


def _require_equal_roots(config: ModelConfig) -> None:
    if config.gamma1 != config.gamma2:
        raise ValueError(
            f"zeta combination needs gamma1 == gamma2, got {config.gamma1} and {config.gamma2}"
        )
    if not config.regime.same_sign:
        raise ValueError(f"zeta combination needs equal roots, regime {config.regime.value} has opposite signs")


def zeta_combination(fs: FunctionalSet, config: ModelConfig) -> float:
    """n (xi_theta - phi_theta) / k_n + xi_theta / (2 gamma), equal roots only."""
    _require_equal_roots(config)
    k_n = config.k_n
    return config.n * (fs.xi_theta - fs.phi_theta) / k_n + fs.xi_theta / (2.0 * config.gamma1)


def zeta_weights(config: ModelConfig) -> np.ndarray:
    _require_equal_roots(config)
    w = weights(config)
    return config.n * (w[0] - w[4]) / config.k_n + w[0] / (2.0 * config.gamma1)


# Exact finite-n covariances --------------------------------------------------


def exact_covariance(config: ModelConfig) -> np.ndarray:
    """Finite-n covariance of (xi_theta, eta_theta, xi_rho, eta_rho)."""
    w = weights(config)[:4]
    return config.sigma**2 * (w @ w.T)


def exact_gamma_covariance(config: ModelConfig) -> np.ndarray:
    """Finite-n covariance of (phi_theta, xi_theta, eta_theta)."""
    w = weights(config)[[4, 0, 1]]
    return config.sigma**2 * (w @ w.T)


def exact_xi_covariance(config: ModelConfig) -> np.ndarray:
    """Finite-n covariance of (phi_theta, zeta) under equal roots."""
    w = np.vstack([weights(config)[4], zeta_weights(config)])
    return config.sigma**2 * (w @ w.T)


# Limits ----------------------------------------------------------------------


def limit_covariance(config: ModelConfig) -> np.ndarray:
    """Limit covariance of (xi_theta, eta_theta, xi_rho, eta_rho).

    Same-sign roots give the correlated matrix; opposite signs make all four
    components independent.
    """
    s2, g1, g2 = config.sigma**2, config.gamma1, config.gamma2
    a, b = s2 / (2 * g1), s2 / (2 * g2)
    c = s2 / (g1 + g2) if config.regime.same_sign else 0.0
    return np.array(
        [
            [a, 0.0, c, 0.0],
            [0.0, a, 0.0, c],
            [c, 0.0, b, 0.0],
            [0.0, c, 0.0, b],
        ]
    )


def limit_gamma_covariance(config: ModelConfig) -> np.ndarray:
    """Limit covariance of (phi_theta, xi_theta, eta_theta)."""
    a = config.sigma**2 / (2 * config.gamma1)
    return np.array([[a, a, 0.0], [a, a, 0.0], [0.0, 0.0, a]])


def limit_xi_covariance(config: ModelConfig) -> np.ndarray:
    """Limit covariance of (phi_theta, zeta)."""
    s2, g = config.sigma**2, config.gamma1
    return np.array([[s2 / (2 * g), s2 / (2 * g**2)], [s2 / (2 * g**2), 5 * s2 / (8 * g**3)]])


# Monte Carlo -----------------------------------------------------------------


def sample_functionals(config: ModelConfig, base_seed: int, reps: int, chunk: int = 1000) -> np.ndarray:
    """Functionals of ``reps`` independent noise draws, shape (reps, 5)."""
    out = np.empty((reps, 5))
    w = weights(config)
    for start in range(0, reps, chunk):
        stop = min(start + chunk, reps)
        noise = np.stack(
            [draw_noise(config, make_generator(replication_seed(base_seed, i))) for i in range(start, stop)]
        )
        out[start:stop] = noise @ w.T
    return out


def batch_covariance(samples: np.ndarray, n_batches: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Sample covariance of the rows of ``samples`` and batch standard errors per entry."""
    samples = np.asarray(samples)
    if samples.shape[0] < 2 * n_batches:
        raise ValueError("need at least two samples per batch")
    cov = np.cov(samples, rowvar=False)
    batches = np.array_split(samples, n_batches)
    per_batch = np.stack([np.cov(b, rowvar=False) for b in batches])
    se = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return cov, se
