"""Nonparametric estimators built from randomly right-censored pairs ``(Z, delta)``.

All estimators are returned as :class:`StepFunction` objects: right-continuous,
evaluable anywhere, with exact left limits at every knot. Tied observations are
kept in input order (stable sort) and each receives its own ``n - i + 1``
risk-set denominator, exactly as in the index formulas.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DomainError

__all__ = [
    "CensoredSample",
    "OrderedSample",
    "StepFunction",
    "order_sample",
    "empirical_cdf",
    "empirical_subdist",
    "nelson_aalen_hazard",
    "nelson_aalen_cdf",
    "kaplan_meier_cdf",
    "product_limit_survival",
]


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CensoredSample:
    """Observed minima ``z`` with censoring indicators ``delta`` (1 = uncensored)."""

    z: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z, dtype=float).ravel()
        d = np.asarray(self.delta).ravel()
        if z.size == 0:
            raise DataError("a censored sample needs at least one observation")
        if z.size != d.size:
            raise DataError(f"z and delta lengths differ ({z.size} != {d.size})")
        if not np.all(np.isfinite(z)) or np.any(z < 0):
            raise DataError("observations must be finite and non-negative")
        if not np.all((d == 0) | (d == 1)):
            raise DataError("censoring indicators must be 0 or 1")
        object.__setattr__(self, "z", _frozen(z))
        object.__setattr__(self, "delta", _frozen(d))

    def __len__(self):
        return self.z.size

    @classmethod
    def from_latent(cls, x, y) -> "CensoredSample":
        """Censor ``x`` by ``y``: observe ``min(x, y)`` and ``1{x <= y}``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return cls(np.minimum(x, y), (x <= y).astype(float))


@dataclass(frozen=True)
class OrderedSample:
    """Order statistics ``Z_{1:n} <= ... <= Z_{n:n}`` with their concomitant indicators.

    Ranks are 1-based throughout: ``z_at(i)`` is ``Z_{i:n}`` and ``top(i)`` is
    ``Z_{n-i+1:n}`` (so ``top(1)`` is the maximum).
    """

    z_sorted: np.ndarray
    delta_concomitant: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        z = _frozen(self.z_sorted)
        d = _frozen(self.delta_concomitant)
        if z.size == 0 or z.size != d.size:
            raise DataError("ordered sample needs matching, non-empty arrays")
        if np.any(np.diff(z) < 0):
            raise DataError("z_sorted must be non-decreasing")
        object.__setattr__(self, "z_sorted", z)
        object.__setattr__(self, "delta_concomitant", d)
        object.__setattr__(self, "n", int(z.size))

    def z_at(self, i: int) -> float:
        return float(self.z_sorted[i - 1])

    def top(self, i: int) -> float:
        return float(self.z_sorted[self.n - i])

    @property
    def z_desc(self) -> np.ndarray:
        """``(Z_{n:n}, Z_{n-1:n}, ..., Z_{1:n})``."""
        return self.z_sorted[::-1]

    @property
    def delta_desc(self) -> np.ndarray:
        """``(delta_[n:n], ..., delta_[1:n])``."""
        return self.delta_concomitant[::-1]

    def check_k(self, k: int) -> int:
        if int(k) != k or not 1 <= k <= self.n - 1:
            raise DomainError(f"k must be an integer with 1 <= k <= n-1 = {self.n - 1}, got {k!r}")
        return int(k)


def order_sample(s: CensoredSample) -> OrderedSample:
    """Stable sort of ``s`` by ``z``; indicators travel with their observation."""
    if not isinstance(s, CensoredSample):
        s = CensoredSample(*s)
    order = np.argsort(s.z, kind="stable")
    return OrderedSample(s.z[order], s.delta[order])


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function.

    Takes ``values[j]`` on ``[knots[j], knots[j+1])`` and ``value_before_first``
    left of ``knots[0]``. If ``value_after_last`` is set it replaces the last
    value strictly to the right of ``knots[-1]`` (used for completions beyond
    the sample maximum). ``support_max`` marks the largest point at which the
    estimator is defined; see :meth:`beyond_support`.
    """

    knots: np.ndarray
    values: np.ndarray
    value_before_first: float = 0.0
    value_after_last: float | None = None
    support_max: float | None = None

    def __post_init__(self):
        knots = _frozen(self.knots)
        values = _frozen(self.values)
        if knots.size != values.size or knots.size == 0:
            raise DomainError("knots and values must be non-empty and of equal length")
        if np.any(np.diff(knots) <= 0):
            raise DomainError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def _lookup(self, x, side):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.knots, x, side=side) - 1
        out = np.where(idx >= 0, self.values[np.maximum(idx, 0)], self.value_before_first)
        return x, out

    def __call__(self, x):
        x, out = self._lookup(x, "right")
        if self.value_after_last is not None:
            out = np.where(x > self.knots[-1], self.value_after_last, out)
        return float(out) if out.ndim == 0 else out

    def left_limit(self, x):
        """``lim_{u -> x-} f(u)``."""
        x, out = self._lookup(x, "left")
        if self.value_after_last is not None:
            out = np.where(x > self.knots[-1], self.value_after_last, out)
        return float(out) if out.ndim == 0 else out

    def jumps(self) -> np.ndarray:
        """``f(knot) - f(knot-)`` at each knot."""
        previous = np.concatenate([[self.value_before_first], self.values[:-1]])
        return self.values - previous

    def beyond_support(self, x):
        """Boolean mask of points lying strictly above ``support_max``."""
        x = np.asarray(x, dtype=float)
        if self.support_max is None:
            return np.zeros_like(x, dtype=bool)
        return x > self.support_max


def _at_group_ends(s: OrderedSample, per_index):
    """Collapse per-rank cumulative values onto distinct knots (last rank of each tie group)."""
    knots = np.unique(s.z_sorted)
    ends = np.searchsorted(s.z_sorted, knots, side="right") - 1
    return knots, np.asarray(per_index)[ends]


def empirical_cdf(s: OrderedSample) -> StepFunction:
    """``H_n(v) = n^-1 sum 1(Z_i <= v)``."""
    knots, values = _at_group_ends(s, np.arange(1, s.n + 1) / s.n)
    return StepFunction(knots, values)


def empirical_subdist(s: OrderedSample, which: int) -> StepFunction:
    """``H_n^(1)`` (``which=1``, uncensored) or ``H_n^(0)`` (``which=0``, censored)."""
    if which not in (0, 1):
        raise DomainError(f"which must be 0 or 1, got {which!r}")
    ind = s.delta_concomitant if which == 1 else 1.0 - s.delta_concomitant
    knots, values = _at_group_ends(s, np.cumsum(ind) / s.n)
    return StepFunction(knots, values)


def _risk_sets(n):
    return n - np.arange(1, n + 1) + 1.0


def nelson_aalen_hazard(s: OrderedSample) -> StepFunction:
    """``Lambda_n(z) = sum_{i: Z_{i:n} <= z} delta_[i:n] / (n - i + 1)``.

    Defined up to ``Z_{n:n}``; beyond it the function stays at
    ``Lambda_n(Z_{n:n})`` and :meth:`StepFunction.beyond_support` flags the point.
    """
    cum = np.cumsum(s.delta_concomitant / _risk_sets(s.n))
    knots, values = _at_group_ends(s, cum)
    return StepFunction(knots, values, support_max=float(s.z_sorted[-1]))


def nelson_aalen_cdf(s: OrderedSample) -> StepFunction:
    """``1 - exp(-Lambda_n(z))`` up to ``Z_{n:n}``, completed by 1 strictly beyond it."""
    hazard = nelson_aalen_hazard(s)
    return StepFunction(
        hazard.knots,
        -np.expm1(-hazard.values),
        value_after_last=1.0,
        support_max=hazard.support_max,
    )


def product_limit_survival(events) -> np.ndarray:
    """Per-rank product ``prod_{l <= i} ((n-l)/(n-l+1)) ** events[l]``.

    Consecutive event ranks ``a..b`` telescope to ``(n-b)/(n-a+1)``, so the
    product is formed run by run. With no censoring this returns ``(n-i)/n``
    with a single rounding.
    """
    e = np.asarray(events).astype(bool)
    n = e.size
    i = np.arange(1, n + 1)
    prev = np.concatenate([[False], e[:-1]])
    nxt = np.concatenate([e[1:], [False]])
    starts = e & ~prev
    run_start = i[starts]
    run_end = i[e & ~nxt]
    run_factor = (n - run_end) / (n - run_start + 1.0)
    base = np.concatenate([[1.0], np.cumprod(run_factor)])
    run_id = np.cumsum(starts)  # runs begun up to and including rank i
    out = base[run_id].copy()
    in_run = np.flatnonzero(e)
    r = run_id[in_run] - 1
    out[in_run] = base[r] * ((n - i[in_run]) / (n - run_start[r] + 1.0))
    return out


def kaplan_meier_cdf(s: OrderedSample, target: str = "F", complete: bool = True) -> StepFunction:
    """Kaplan-Meier estimator of ``F`` (events ``delta``) or ``G`` (events ``1 - delta``).

    The product-limit formula is stated for ``z < Z_{n:n}``. With
    ``complete=True`` the same formula is used at and beyond ``Z_{n:n}``, which
    ends the ``F`` curve at 1 when the largest observation is uncensored and
    keeps its last value otherwise (symmetrically for ``G``). With
    ``complete=False`` those points evaluate to NaN.
    """
    if target not in ("F", "G"):
        raise DomainError(f"target must be 'F' or 'G', got {target!r}")
    events = s.delta_concomitant if target == "F" else 1.0 - s.delta_concomitant
    cdf = 1.0 - product_limit_survival(events)
    knots, values = _at_group_ends(s, cdf)
    if complete:
        return StepFunction(knots, values, support_max=float(s.z_sorted[-1]))
    values = values.copy()
    values[-1] = np.nan
    return StepFunction(knots, values, value_after_last=np.nan, support_max=float(s.z_sorted[-1]))
