"""Model parameterisation, path simulation and closed-form path oracles."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
from scipy.signal import lfilter

from mildar.rng import make_generator

N_MAX = 2000
EQUAL_ROOTS_RTOL = 1e-6


class Regime(str, enum.Enum):
    """Signs of (theta_n, rho_n)."""

    PP = "PP"
    PM = "PM"
    MM = "MM"
    MP = "MP"

    @property
    def theta_sign(self) -> float:
        return 1.0 if self.value[0] == "P" else -1.0

    @property
    def rho_sign(self) -> float:
        return 1.0 if self.value[1] == "P" else -1.0

    @property
    def same_sign(self) -> bool:
        return self.value[0] == self.value[1]

    def flipped(self) -> "Regime":
        swap = {"P": "M", "M": "P"}
        return Regime(swap[self.value[0]] + swap[self.value[1]])

    @classmethod
    def parse(cls, value: "str | Regime") -> "Regime":
        if isinstance(value, Regime):
            return value
        return cls(str(value).upper())


class Noise(str, enum.Enum):
    """Distribution of the driving noise V_k (symmetric, mean 0, variance sigma**2)."""

    GAUSSIAN = "Gaussian"
    RADEMACHER = "Rademacher"
    UNIFORM = "Uniform"

    @classmethod
    def parse(cls, value: "str | Noise") -> "Noise":
        if isinstance(value, Noise):
            return value
        for member in cls:
            if member.value.lower() == str(value).lower():
                return member
        raise ValueError(f"unknown noise distribution {value!r}")


class NearEqualRootsError(ValueError):
    """theta_n and rho_n are distinct but too close for the distinct-roots formula."""


@dataclass(frozen=True)
class ModelConfig:
    """Full parameterisation of one model instance.

    ``regime`` fixes the signs: ``PM`` means theta_n = 1 + gamma1/k_n and
    rho_n = -1 - gamma2/k_n, and so on.
    """

    gamma1: float
    gamma2: float
    alpha: float = 1.0 / 3.0
    n: int = 400
    regime: Regime = Regime.PP
    sigma: float = 1.0
    noise: Noise = Noise.GAUSSIAN

    def __post_init__(self) -> None:
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        object.__setattr__(self, "noise", Noise.parse(self.noise))
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise ValueError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("gamma1", "gamma2", "alpha", "sigma"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (self.gamma1 > 0 and math.isfinite(self.gamma1)):
            raise ValueError(f"gamma1 must be positive, got {self.gamma1}")
        if not (self.gamma2 > 0 and math.isfinite(self.gamma2)):
            raise ValueError(f"gamma2 must be positive, got {self.gamma2}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 2 <= self.n <= N_MAX:
            raise ValueError(f"n must lie in [2, {N_MAX}], got {self.n}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def k_n(self) -> float:
        return float(self.n) ** self.alpha

    @property
    def theta(self) -> float:
        return effective_params(self)[0]

    @property
    def rho(self) -> float:
        return effective_params(self)[1]

    @property
    def equal_roots(self) -> bool:
        """True when theta_n == rho_n exactly (gamma1 == gamma2, same signs)."""
        return self.gamma1 == self.gamma2 and self.regime.same_sign

    def flipped(self) -> "ModelConfig":
        return dataclasses.replace(self, regime=self.regime.flipped())

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "alpha": self.alpha,
            "n": self.n,
            "regime": self.regime.value,
            "sigma": self.sigma,
            "noise": self.noise.value,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ModelConfig":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ValueError(f"unknown ModelConfig keys: {sorted(unknown)}")
        return cls(**data)


def effective_params(config: ModelConfig) -> tuple[float, float, float]:
    """Return ``(theta_n, rho_n, k_n)`` for a configuration."""
    k_n = config.k_n
    theta = config.regime.theta_sign * (1.0 + config.gamma1 / k_n)
    rho = config.regime.rho_sign * (1.0 + config.gamma2 / k_n)
    return theta, rho, k_n


def overflow_risk(config: ModelConfig) -> bool:
    """True when |theta_n|**(2n) or |rho_n|**(2n) exceeds 1e300."""
    theta, rho, _ = effective_params(config)
    top = max(abs(theta), abs(rho))
    return 2 * config.n * math.log10(top) > 300.0


def signed_powers(base: float, exponents: np.ndarray) -> np.ndarray:
    """``base ** exponents`` for integer exponents, valid for negative bases."""
    exponents = np.asarray(exponents)
    mag = np.power(abs(base), exponents.astype(float))
    if base < 0:
        mag = np.where(exponents % 2 == 1, -mag, mag)
    return mag


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One realisation; index 0 holds the zero initial condition.

    ``v`` has length n (V_1..V_n); ``eps`` and ``x`` have length n + 1.
    """

    config: ModelConfig
    v: np.ndarray
    eps: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        n = self.config.n
        if self.v.shape != (n,) or self.eps.shape != (n + 1,) or self.x.shape != (n + 1,):
            raise ValueError("path arrays do not match config.n")
        for arr in (self.v, self.eps, self.x):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def v_padded(self) -> np.ndarray:
        """Noise with a leading zero so that ``v_padded[k] == V_k``."""
        return np.concatenate(([0.0], self.v))

    def is_zero(self) -> bool:
        return not np.any(self.x)


def draw_noise(config: ModelConfig, rng: np.random.Generator) -> np.ndarray:
    n, sigma = config.n, config.sigma
    if config.noise is Noise.GAUSSIAN:
        return sigma * rng.standard_normal(n)
    if config.noise is Noise.RADEMACHER:
        return sigma * (2.0 * rng.integers(0, 2, size=n) - 1.0)
    half_width = math.sqrt(3.0) * sigma
    return rng.uniform(-half_width, half_width, size=n)


def ar1_filter(coef: float, drive: np.ndarray) -> np.ndarray:
    """Run y_k = coef * y_{k-1} + drive_k from y_0 = 0; returns y_0..y_n.

    ``lfilter`` with a unit numerator performs exactly this multiply-add per
    step, so the result is bit-identical to the explicit loop.
    """
    out = np.empty(drive.shape[-1] + 1)
    out[0] = 0.0
    out[1:] = lfilter([1.0], [1.0, -coef], drive)
    return out


def path_from_noise(config: ModelConfig, v: np.ndarray) -> SamplePath:
    """Build the path generated by an explicit noise vector."""
    v = np.array(v, dtype=float)
    theta, rho, _ = effective_params(config)
    eps = ar1_filter(rho, v)
    x = ar1_filter(theta, eps[1:])
    return SamplePath(config=config, v=v, eps=eps, x=x)


def simulate(config: ModelConfig, seed: int) -> SamplePath:
    """Simulate one path; deterministic in ``(config, seed)``."""
    return path_from_noise(config, draw_noise(config, make_generator(seed)))


def sign_flip(path: SamplePath) -> SamplePath:
    """Map a path to Y_k = (-1)^k X_k, the path of (-theta_n, -rho_n) driven by W_k = (-1)^k V_k."""
    n = path.n
    alt = np.where(np.arange(n + 1) % 2 == 0, 1.0, -1.0)
    return SamplePath(
        config=path.config.flipped(),
        v=alt[1:] * path.v,
        eps=alt * path.eps,
        x=alt * path.x,
    )


class ClosedForm(NamedTuple):
    value: float
    branch: str  # "distinct" or "equal"


def _closed_form_all(path: SamplePath, rtol: float) -> tuple[np.ndarray, str]:
    theta, rho, _ = effective_params(path.config)
    n = path.n
    ell = np.arange(1, n + 1)
    out = np.zeros(n + 1)
    if path.config.equal_roots:
        # X_k = theta^k sum_{l<=k} (k - l + 1) theta^{-l} V_l
        inv = signed_powers(theta, -ell) * path.v
        for k in range(1, n + 1):
            out[k] = signed_powers(theta, np.array([k]))[0] * np.sum((k - ell[:k] + 1) * inv[:k])
        return out, "equal"
    if abs(theta - rho) < rtol * (abs(theta) + abs(rho)):
        raise NearEqualRootsError(
            f"|theta_n - rho_n| = {abs(theta - rho):.3e} is below the degeneracy threshold"
        )
    first, second = closed_form_terms(path)
    out[1:] = first - second
    return out, "distinct"


def closed_form_terms(path: SamplePath) -> tuple[np.ndarray, np.ndarray]:
    """The two distinct-roots terms of X_1..X_n; their difference is X_k."""
    theta, rho, _ = effective_params(path.config)
    ell = np.arange(1, path.n + 1)
    a = np.cumsum(signed_powers(theta, -ell) * path.v)
    b = np.cumsum(signed_powers(rho, -ell) * path.v)
    return (
        theta / (theta - rho) * signed_powers(theta, ell) * a,
        rho / (theta - rho) * signed_powers(rho, ell) * b,
    )


def closed_form_path(path: SamplePath, rtol: float = EQUAL_ROOTS_RTOL) -> tuple[np.ndarray, str]:
    """Closed-form X_0..X_n reconstructed from the noise alone, plus the branch used."""
    return _closed_form_all(path, rtol)


def closed_form_x(path: SamplePath, k: int, rtol: float = EQUAL_ROOTS_RTOL) -> ClosedForm:
    """Closed-form value of X_k (1 <= k <= n).

    Uses the distinct-roots expansion unless theta_n == rho_n exactly, in
    which case the repeated-root form applies. Raises
    :class:`NearEqualRootsError` when the roots differ by less than
    ``rtol * (|theta_n| + |rho_n|)``.
    """
    if not 1 <= k <= path.n:
        raise IndexError(f"k must lie in [1, {path.n}], got {k}")
    theta, rho, _ = effective_params(path.config)
    ell = np.arange(1, k + 1)
    v = path.v[:k]
    if path.config.equal_roots:
        value = signed_powers(theta, np.array([k]))[0] * np.sum(
            (k - ell + 1) * signed_powers(theta, -ell) * v
        )
        return ClosedForm(float(value), "equal")
    if abs(theta - rho) < rtol * (abs(theta) + abs(rho)):
        raise NearEqualRootsError(
            f"|theta_n - rho_n| = {abs(theta - rho):.3e} is below the degeneracy threshold"
        )
    tk = signed_powers(theta, np.array([k]))[0]
    rk = signed_powers(rho, np.array([k]))[0]
    value = theta / (theta - rho) * tk * np.sum(signed_powers(theta, -ell) * v) - rho / (
        theta - rho
    ) * rk * np.sum(signed_powers(rho, -ell) * v)
    return ClosedForm(float(value), "distinct")


def closed_form_eps(path: SamplePath, k: int) -> float:
    """eps_k = rho_n^k sum_{l<=k} rho_n^{-l} V_l."""
    if not 1 <= k <= path.n:
        raise IndexError(f"k must lie in [1, {path.n}], got {k}")
    _, rho, _ = effective_params(path.config)
    ell = np.arange(1, k + 1)
    rk = signed_powers(rho, np.array([k]))[0]
    return float(rk * np.sum(signed_powers(rho, -ell) * path.v[:k]))
