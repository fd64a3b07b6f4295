"""Closed-form limiting bias and variance of the Nelson-Aalen tail index estimator.

With ``gamma = p * gamma1`` and ``q = 1 - p``, ``sqrt(k) * (estimate - gamma1)``
is asymptotically normal with mean ``lam / (1 - tau)`` and variance
``p * gamma1**2 / (2p - 1)``. The adapted Hill estimator (``EFG``) has mean
``lam / (1 - p*tau)`` and variance ``gamma1**2 / p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "LimitLawParams",
    "limit_variance",
    "limit_variance_terms",
    "limit_bias",
    "efg_limit_variance",
    "efg_limit_bias",
    "weighted_brownian_integral_variance",
]


@dataclass(frozen=True)
class LimitLawParams:
    """Parameters of the Gaussian limit: tail index, observed proportion, second order."""

    gamma1: float
    p: float
    tau: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma1) and self.gamma1 > 0):
            raise DomainError(f"gamma1 must be positive, got {self.gamma1!r}")
        if not (0.5 < self.p <= 1.0):
            raise DomainError(
                f"p must satisfy 1/2 < p <= 1 (the variance p/(2p-1) diverges at p = 1/2), got {self.p!r}"
            )
        if not (math.isfinite(self.tau) and self.tau <= 0):
            raise DomainError(f"tau must be <= 0, got {self.tau!r}")
        if not math.isfinite(self.lam):
            raise DomainError("lam must be finite")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def gamma(self) -> float:
        return self.p * self.gamma1


def limit_variance(params: LimitLawParams) -> float:
    return params.p * params.gamma1**2 / (2.0 * params.p - 1.0)


def limit_variance_terms(params: LimitLawParams) -> dict[str, float]:
    """The four pieces of ``E[C1 + C2 + C3]^2``.

    ``C1`` and ``C2`` are power-weighted integrals of the two independent
    Brownian motions and ``C3`` is the endpoint term. Keys: ``var_c1``,
    ``var_c2``, ``var_c3`` and ``two_cov_c2_c3``; they add up to
    :func:`limit_variance`.
    """
    p, q, g = params.p, params.q, params.gamma
    denom = 2.0 * q * q - 3.0 * q + 1.0
    shrink = 1.0 - q / p
    return {
        "var_c1": 2.0 * q * g * g / denom,
        "var_c2": shrink**2 * 2.0 * p * g * g / denom,
        "var_c3": g * g / p,
        "two_cov_c2_c3": -2.0 * g * g / p * shrink,
    }


def limit_bias(params: LimitLawParams) -> float:
    return params.lam / (1.0 - params.tau)


def efg_limit_variance(params: LimitLawParams) -> float:
    return params.gamma1**2 / params.p


def efg_limit_bias(params: LimitLawParams) -> float:
    return params.lam / (1.0 - params.p * params.tau)


def weighted_brownian_integral_variance(q: float) -> float:
    """``Var int_0^1 s^(-q-1) B(s) ds = 2 / ((1-q)(1-2q))`` for ``0 <= q < 1/2``."""
    if not 0.0 <= q < 0.5:
        raise DomainError(f"the integral diverges unless 0 <= q < 1/2, got q={q!r}")
    return 2.0 / ((1.0 - q) * (1.0 - 2.0 * q))
