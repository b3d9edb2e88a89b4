"""Normalized statistics, their Cauchy limits and goodness-of-fit diagnostics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from mildar.estimation import EstimateResult
from mildar.model import ModelConfig, Regime, effective_params
from mildar.rng import make_generator


class BranchMismatch(ValueError):
    """The configuration is outside the branch's applicability region."""


class TheoremBranch(str, enum.Enum):
    T1_1 = "T1_1"
    T1_2 = "T1_2"
    T1_3 = "T1_3"
    T2_1 = "T2_1"
    T2_2 = "T2_2"

    @property
    def same_sign(self) -> bool:
        """T1 branches need same-sign roots, T2 branches opposite signs."""
        return self.value.startswith("T1")

    @classmethod
    def parse(cls, value: "str | TheoremBranch") -> "TheoremBranch":
        if isinstance(value, TheoremBranch):
            return value
        return cls(str(value).upper())


def check_branch(branch: TheoremBranch, config: ModelConfig) -> None:
    """Raise :class:`BranchMismatch` unless ``config`` satisfies the branch's hypotheses."""
    branch = TheoremBranch.parse(branch)
    g1, g2 = config.gamma1, config.gamma2
    if branch.same_sign != config.regime.same_sign:
        want = "PP or MM" if branch.same_sign else "PM or MP"
        raise BranchMismatch(f"{branch.value} needs regime {want}, got {config.regime.value}")
    part = branch.value[-1]
    if part == "1" and not g1 > g2:
        raise BranchMismatch(f"{branch.value} needs gamma1 > gamma2, got {g1} and {g2}")
    if part == "2" and not g2 > g1:
        raise BranchMismatch(f"{branch.value} needs gamma2 > gamma1, got {g1} and {g2}")
    if part == "3" and g1 != g2:
        raise BranchMismatch(f"{branch.value} needs gamma1 == gamma2, got {g1} and {g2}")


def infer_branch(config: ModelConfig) -> TheoremBranch:
    """The unique branch whose hypotheses ``config`` satisfies."""
    g1, g2 = config.gamma1, config.gamma2
    if config.regime.same_sign:
        if g1 > g2:
            return TheoremBranch.T1_1
        return TheoremBranch.T1_2 if g2 > g1 else TheoremBranch.T1_3
    if g1 == g2:
        raise BranchMismatch("opposite-sign roots with gamma1 == gamma2 are not covered by any branch")
    return TheoremBranch.T2_1 if g1 > g2 else TheoremBranch.T2_2


def _signed_ratio_power(num: float, den: float, n: int) -> float:
    """(num/den)**n without forming either power, so it cannot overflow early."""
    ratio = num / den
    mag = math.exp(n * math.log(abs(ratio)))
    return -mag if (ratio < 0 and n % 2 == 1) else mag


@dataclass(frozen=True)
class CauchyRef:
    location: float
    scale: float

    def __post_init__(self) -> None:
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"Cauchy scale must be positive, got {self.scale}")
        if not math.isfinite(self.location):
            raise ValueError(f"Cauchy location must be finite, got {self.location}")

    @property
    def dist(self):
        return stats.cauchy(loc=self.location, scale=self.scale)

    def cdf(self, x):
        return self.dist.cdf(x)

    def ppf(self, q):
        return self.dist.ppf(q)

    def sample(self, size: int, seed: int) -> np.ndarray:
        return self.location + self.scale * make_generator(seed).standard_cauchy(size)

    def to_dict(self) -> dict[str, float]:
        return {"location": self.location, "scale": self.scale}


def normalized_statistic(branch: TheoremBranch, est: EstimateResult, config: ModelConfig) -> float:
    """The theorem statistic for one fitted path.

    Deviations come from ``est.theta_dev`` / ``est.theta_minus_rho`` rather than
    ``theta_hat - theta_n``, which would be pure rounding noise at moderate n.
    The T1_2 statistic equals
    (g1+g2)/(2 g2 (g2-g1)) * rho^n theta^-n * (k_n (theta_hat - theta_n) - (g2 - g1)),
    the mirror image of T1_1 under swapping the two roots.
    """
    branch = TheoremBranch.parse(branch)
    check_branch(branch, config)
    theta, rho, k_n = effective_params(config)
    n, g1, g2 = config.n, config.gamma1, config.gamma2
    if branch is TheoremBranch.T1_1:
        c = (g1 + g2) / (2 * g1 * (g1 - g2))
        return c * k_n * _signed_ratio_power(theta, rho, n) * est.theta_dev
    if branch is TheoremBranch.T1_2:
        c = (g1 + g2) / (2 * g2 * (g2 - g1))
        return c * k_n * _signed_ratio_power(rho, theta, n) * est.theta_minus_rho
    if branch is TheoremBranch.T1_3:
        return (n / k_n) * (n * est.theta_dev - theta)
    if branch is TheoremBranch.T2_1:
        c = math.sqrt(g2 / g1) / (2 * g1)
        return c * k_n * _signed_ratio_power(theta, rho, n) * est.theta_dev
    c = math.sqrt(g1 / g2) / (2 * g2)
    return c * k_n * _signed_ratio_power(rho, theta, n) * est.theta_minus_rho


def ratio_cauchy(cov: np.ndarray) -> CauchyRef:
    """Law of B/A for zero-mean bivariate normal (A, B) with covariance ``cov``."""
    cov = np.asarray(cov, dtype=float)
    var_a, c, var_b = cov[0, 0], cov[0, 1], cov[1, 1]
    det = var_a * var_b - c * c
    if var_a <= 0 or det <= 0:
        raise ValueError("covariance must be positive definite")
    return CauchyRef(location=c / var_a, scale=math.sqrt(det) / var_a)


def ratio_covariance(branch: TheoremBranch, config: ModelConfig) -> np.ndarray:
    """Covariance of (denominator, numerator) of the limiting ratio for a T1 branch.

    T1_1 is xi_rho/xi_theta, T1_2 is xi_theta/xi_rho (both from the same-sign
    matrix) and T1_3 is zeta/phi.
    """
    branch = TheoremBranch.parse(branch)
    g1, g2 = config.gamma1, config.gamma2
    if branch is TheoremBranch.T1_1:
        return np.array([[1 / (2 * g1), 1 / (g1 + g2)], [1 / (g1 + g2), 1 / (2 * g2)]])
    if branch is TheoremBranch.T1_2:
        return np.array([[1 / (2 * g2), 1 / (g1 + g2)], [1 / (g1 + g2), 1 / (2 * g1)]])
    if branch is TheoremBranch.T1_3:
        g = g1
        return np.array([[1 / (2 * g), 1 / (2 * g**2)], [1 / (2 * g**2), 5 / (8 * g**3)]])
    raise ValueError(f"{branch.value} has a standard Cauchy limit, not a correlated ratio")


def analytic_scale(branch: TheoremBranch, config: ModelConfig) -> float:
    """Closed-form scale of the T1 limits (validated by :func:`ratio_scale_oracle`)."""
    branch = TheoremBranch.parse(branch)
    g1, g2 = config.gamma1, config.gamma2
    if branch is TheoremBranch.T1_1:
        return math.sqrt(g1 / g2) * (g1 - g2) / (g1 + g2)
    if branch is TheoremBranch.T1_2:
        return math.sqrt(g2 / g1) * (g2 - g1) / (g1 + g2)
    if branch is TheoremBranch.T1_3:
        return 1 / (2 * g1)
    return 1.0


def analytic_location(branch: TheoremBranch, config: ModelConfig) -> float:
    """Location for the positive-sign regimes (PP for T1, PM for T2)."""
    branch = TheoremBranch.parse(branch)
    g1, g2 = config.gamma1, config.gamma2
    if branch is TheoremBranch.T1_1:
        return 2 * g1 / (g1 + g2)
    if branch is TheoremBranch.T1_2:
        return 2 * g2 / (g1 + g2)
    if branch is TheoremBranch.T1_3:
        return 1 / g1
    return 0.0


def cauchy_reference(branch: TheoremBranch, config: ModelConfig) -> CauchyRef:
    """Limit law of :func:`normalized_statistic`.

    MM and MP runs are the sign-flipped images of PP and PM runs, under which
    every statistic changes sign: the location is negated, the scale kept.
    """
    branch = TheoremBranch.parse(branch)
    check_branch(branch, config)
    loc = analytic_location(branch, config)
    if config.regime in (Regime.MM, Regime.MP):
        loc = -loc
    return CauchyRef(location=loc + 0.0, scale=analytic_scale(branch, config))


@dataclass(frozen=True)
class OracleFit:
    location: float
    scale: float
    samples: int

    def relative_error(self, scale: float) -> float:
        return abs(self.scale - scale) / scale


def ratio_scale_oracle(cov: np.ndarray, samples: int = 10_000_000, seed: int = 0, chunk: int = 2_000_000) -> OracleFit:
    """Fit a Cauchy law to simulated ratios B/A by median and half-IQR."""
    chol = np.linalg.cholesky(np.asarray(cov, dtype=float))
    rng = make_generator(seed)
    ratios = np.empty(samples)
    for start in range(0, samples, chunk):
        stop = min(start + chunk, samples)
        z = rng.standard_normal((stop - start, 2)) @ chol.T
        ratios[start:stop] = z[:, 1] / z[:, 0]
    q1, med, q3 = np.quantile(ratios, [0.25, 0.5, 0.75])
    return OracleFit(location=float(med), scale=float((q3 - q1) / 2), samples=samples)


def split_finite(samples: Sequence[float]) -> tuple[np.ndarray, int]:
    """Finite entries of ``samples`` and the number of NaN/inf entries dropped."""
    arr = np.asarray(samples, dtype=float).ravel()
    mask = np.isfinite(arr)
    return arr[mask], int(arr.size - mask.sum())


def ks_distance(samples: Sequence[float], ref: CauchyRef) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and ``ref``."""
    finite, bad = split_finite(samples)
    if bad:
        raise ValueError(f"{bad} non-finite samples; drop them with split_finite and report the count")
    if finite.size < 2:
        raise ValueError("need at least 2 samples")
    return float(stats.kstest(finite, ref.cdf).statistic)


@dataclass(frozen=True)
class QuantileTable:
    probs: np.ndarray
    empirical: np.ndarray
    analytic: np.ndarray

    def to_rows(self) -> list[dict[str, float]]:
        return [
            {"prob": float(p), "empirical": float(e), "analytic": float(a)}
            for p, e, a in zip(self.probs, self.empirical, self.analytic)
        ]


DEFAULT_PROBS = (0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95)


def quantile_table(samples: Sequence[float], ref: CauchyRef, probs: Sequence[float] = DEFAULT_PROBS) -> QuantileTable:
    probs = np.sort(np.asarray(probs, dtype=float).ravel())
    if probs.size == 0 or np.any((probs <= 0) | (probs >= 1)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    finite, bad = split_finite(samples)
    if bad:
        raise ValueError(f"{bad} non-finite samples")
    if finite.size == 0:
        raise ValueError("no samples")
    return QuantileTable(probs, np.quantile(finite, probs), ref.ppf(probs))


def tail_fraction(samples: Sequence[float], ref: CauchyRef, width: float = 10.0) -> float:
    """Fraction of samples further than ``width`` scales from the location."""
    finite, _ = split_finite(samples)
    return float(np.mean(np.abs(finite - ref.location) > width * ref.scale))


def analytic_tail_fraction(width: float = 10.0) -> float:
    return 2 * math.atan(1 / width) / math.pi
