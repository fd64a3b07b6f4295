"""Heavy-tailed parametric families and the censoring design algebra.

Every model exposes ``survival``, ``cdf``, ``quantile`` and ``sample``. Sampling
is inverse-transform: uniforms ``u`` in ``[0, 1)`` are pushed through the
quantile function, which is written in terms of ``1 - u`` so ``quantile(1)`` is
never evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "BurrModel",
    "ParetoModel",
    "FrechetModel",
    "CensorshipDesign",
    "design_from_p",
]


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


def _as_probabilities(u):
    u = np.asarray(u, dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u < 0.0) or np.any(u >= 1.0):
        raise DomainError("quantile level must lie in [0, 1)")
    return u


def _as_support(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0.0):
        raise DomainError("survival is defined for x >= 0 only")
    return x


def _unwrap(values):
    return float(values) if np.ndim(values) == 0 else values


class _InverseTransformMixin:
    def cdf(self, x):
        return _unwrap(1.0 - np.asarray(self.survival(x)))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` i.i.d. variates as ``quantile(U)`` with ``U ~ U[0, 1)``."""
        if int(count) != count or count < 1:
            raise DomainError(f"count must be a positive integer, got {count!r}")
        return np.asarray(self.quantile(rng.random(int(count))), dtype=float)


@dataclass(frozen=True)
class BurrModel(_InverseTransformMixin):
    """Burr XII law with survival ``(1 + x**(1/eta)) ** (-eta/gamma)``.

    ``gamma`` is the tail index. The tail quantile function is
    ``(t**(gamma/eta) - 1) ** eta``, whose expansion gives a second-order
    parameter of ``-gamma/eta``.
    """

    eta: float
    gamma: float

    def __post_init__(self):
        _check_positive("eta", self.eta)
        _check_positive("gamma", self.gamma)

    @property
    def tail_index(self) -> float:
        return self.gamma

    def survival(self, x):
        x = _as_support(x)
        with np.errstate(over="ignore"):
            log_base = np.log1p(x ** (1.0 / self.eta))
        return _unwrap(np.exp(-(self.eta / self.gamma) * log_base))

    def quantile(self, u):
        u = _as_probabilities(u)
        # (1-u)^(-gamma/eta) - 1 written with expm1/log1p to keep small-u precision
        # for very large gamma/eta the true quantile exceeds the float range and saturates to inf
        with np.errstate(over="ignore"):
            inner = np.expm1(-(self.gamma / self.eta) * np.log1p(-u))
            return _unwrap(inner ** self.eta)


@dataclass(frozen=True)
class ParetoModel(_InverseTransformMixin):
    """Strict Pareto law: survival ``(x/scale) ** (-1/gamma)`` above ``scale``."""

    gamma: float
    scale: float = 1.0

    def __post_init__(self):
        _check_positive("gamma", self.gamma)
        _check_positive("scale", self.scale)

    @property
    def tail_index(self) -> float:
        return self.gamma

    def survival(self, x):
        x = _as_support(x)
        with np.errstate(divide="ignore"):
            tail = (np.maximum(x, self.scale) / self.scale) ** (-1.0 / self.gamma)
        return _unwrap(np.where(x <= self.scale, 1.0, tail))

    def quantile(self, u):
        u = _as_probabilities(u)
        return _unwrap(self.scale * np.exp(-self.gamma * np.log1p(-u)))


@dataclass(frozen=True)
class FrechetModel(_InverseTransformMixin):
    """Standard Fréchet law ``F(x) = exp(-x ** (-1/gamma))`` on ``x > 0``."""

    gamma: float

    def __post_init__(self):
        _check_positive("gamma", self.gamma)

    @property
    def tail_index(self) -> float:
        return self.gamma

    def survival(self, x):
        x = _as_support(x)
        with np.errstate(divide="ignore"):
            t = np.where(x > 0, x, 1.0) ** (-1.0 / self.gamma)
        return _unwrap(np.where(x > 0, -np.expm1(-t), 1.0))

    def cdf(self, x):
        # direct form keeps full relative accuracy in the lower tail
        x = _as_support(x)
        with np.errstate(divide="ignore"):
            t = np.where(x > 0, x, 1.0) ** (-1.0 / self.gamma)
        return _unwrap(np.where(x > 0, np.exp(-t), 0.0))

    def quantile(self, u):
        u = _as_probabilities(u)
        with np.errstate(divide="ignore"):
            out = (-np.log(np.where(u > 0, u, 0.5))) ** (-self.gamma)
        return _unwrap(np.where(u > 0, out, 0.0))


@dataclass(frozen=True)
class CensorshipDesign:
    """Tail indices of the variable of interest and of the censoring variable.

    ``gamma`` is the tail index of the observed minimum, ``p`` the asymptotic
    proportion of uncensored upper extremes, and ``q = 1 - p``.
    """

    gamma1: float
    gamma2: float

    def __post_init__(self):
        _check_positive("gamma1", self.gamma1)
        _check_positive("gamma2", self.gamma2)
        if not self.gamma1 < self.gamma2:
            raise DomainError(
                "gamma1 < gamma2 is required (equivalently p > 1/2), "
                f"got gamma1={self.gamma1}, gamma2={self.gamma2}"
            )

    @classmethod
    def from_p(cls, gamma1: float, p: float) -> "CensorshipDesign":
        return design_from_p(gamma1, p)

    @property
    def gamma(self) -> float:
        return self.gamma1 * self.gamma2 / (self.gamma1 + self.gamma2)

    @property
    def p(self) -> float:
        return self.gamma2 / (self.gamma1 + self.gamma2)

    @property
    def q(self) -> float:
        return self.gamma1 / (self.gamma1 + self.gamma2)


def design_from_p(gamma1: float, p: float) -> CensorshipDesign:
    """Solve ``p = gamma2 / (gamma1 + gamma2)`` for the censoring tail index."""
    _check_positive("gamma1", gamma1)
    if not (0.5 < p < 1.0):
        raise DomainError(f"p must satisfy 1/2 < p < 1, got {p!r}")
    return CensorshipDesign(gamma1, p * gamma1 / (1.0 - p))
