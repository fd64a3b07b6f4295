"""Extreme value index estimators for randomly right-censored heavy-tailed data.

Every estimator is a pure function of an :class:`~censtail.empirical.OrderedSample`
and the number ``k`` of upper order statistics (``1 <= k <= n - 1``). Notation:
``Z'_i = Z_{n-i+1:n}`` is the i-th largest observation and ``delta'_i`` its
indicator, so the threshold ``Z_{n-k:n}`` is ``Z'_{k+1}``.

Methods
-------
NEW           weighted log-excesses with Nelson-Aalen weights ``a_{i,n}``
NEW_INTEGRAL  the same estimator evaluated as a Stieltjes integral against ``dF_n``
HILL          Hill's estimator computed on the observed ``Z`` (estimates ``gamma``)
EFG           ``HILL / p_hat``
W1, W2        Kaplan-Meier weighted estimators (Worms and Worms)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from statistics import NormalDist

import numpy as np

from .empirical import (
    OrderedSample,
    empirical_cdf,
    empirical_subdist,
    nelson_aalen_cdf,
    product_limit_survival,
)
from .errors import DomainError, NumericError

__all__ = [
    "METHODS",
    "EviEstimate",
    "NewEstimatorWeights",
    "hill",
    "p_hat",
    "efg",
    "new_estimator_weights",
    "new_estimator",
    "new_estimator_integral",
    "worms_w1",
    "worms_w2",
    "estimate",
    "asymptotic_ci",
    "with_ci",
    "estimate_curves",
]

METHODS = ("NEW", "NEW_INTEGRAL", "HILL", "EFG", "W1", "W2")


@dataclass(frozen=True)
class EviEstimate:
    method: str
    gamma1_hat: float
    k: int
    n: int
    p_hat: float | None = None
    ci: tuple[float, float, float] | None = None  # (lower, upper, level)

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}")
        if not 1 <= self.k < self.n:
            raise DomainError(f"need 1 <= k < n, got k={self.k}, n={self.n}")
        if not math.isfinite(self.gamma1_hat):
            raise NumericError(f"{self.method} estimate is not finite")


@dataclass(frozen=True)
class NewEstimatorWeights:
    """Weights ``a_{1,n}, ..., a_{k,n}``; ``a[i-1]`` multiplies ``log(Z'_i / Z'_{k+1})``."""

    a: np.ndarray
    n: int

    @property
    def k(self) -> int:
        return int(self.a.size)


def _threshold(s: OrderedSample, k: int) -> float:
    z_k = s.top(k + 1)
    if not z_k > 0:
        raise NumericError(f"threshold Z_(n-k:n) = {z_k} must be positive to take logarithms", index=s.n - k)
    return z_k


def _log_excesses(s: OrderedSample, k: int) -> np.ndarray:
    """``log(Z'_i / Z'_{k+1})`` for ``i = 1..k``; ratio first, then log."""
    z_k = _threshold(s, k)
    return np.log(s.z_desc[:k] / z_k)


def hill(s: OrderedSample, k: int) -> EviEstimate:
    """Mean of the ``k`` top log-excesses over ``Z_{n-k:n}``."""
    k = s.check_k(k)
    value = math.fsum(_log_excesses(s, k)) / k
    return EviEstimate("HILL", value, k, s.n)


def p_hat(s: OrderedSample, k: int) -> float:
    """Fraction of uncensored observations among the ``k`` largest."""
    k = s.check_k(k)
    return math.fsum(s.delta_desc[:k]) / k


def efg(s: OrderedSample, k: int) -> EviEstimate:
    k = s.check_k(k)
    ph = p_hat(s, k)
    if ph == 0:
        raise NumericError("no uncensored extremes among the top k observations")
    return EviEstimate("EFG", hill(s, k).gamma1_hat / ph, k, s.n, p_hat=ph)


def _suffix_sum(values):
    return np.cumsum(values[::-1])[::-1]


def new_estimator_weights(s: OrderedSample, k: int) -> NewEstimatorWeights:
    """``a_{i,n} = n^-1 delta'_i exp(sum_{j=i}^n 1/j - sum_{j=i}^k delta'_j / j)``.

    Both products of exponentials are taken as one exponential of a
    difference of suffix sums, O(n) in total.
    """
    k = s.check_k(k)
    n = s.n
    j = np.arange(1, n + 1, dtype=float)
    harmonic_tail = _suffix_sum(1.0 / j)[:k]
    d = s.delta_desc[:k]
    event_tail = _suffix_sum(d / j[:k])
    a = d / n * np.exp(harmonic_tail - event_tail)
    a.setflags(write=False)
    return NewEstimatorWeights(a, n)


def new_estimator(s: OrderedSample, k: int) -> EviEstimate:
    k = s.check_k(k)
    w = new_estimator_weights(s, k)
    value = math.fsum(w.a * _log_excesses(s, k))
    return EviEstimate("NEW", value, k, s.n, p_hat=p_hat(s, k))


def new_estimator_integral(s: OrderedSample, k: int, measure: str = "derivation") -> EviEstimate:
    """``(1 / Fbar_n(t)) * int_{x > t} log(x / t) dF_n(x)`` with ``t = Z_{n-k:n}``.

    ``measure`` selects the atoms of ``dF_n``:

    ``"derivation"``
        ``exp{int_0^z dH_n^(0)(v) / Hbar_n(v-)} dH_n^(1)(z)``, the representation
        from which the explicit weights are obtained. Built here from the
        empirical (sub-)distribution step functions, it reproduces
        :func:`new_estimator` up to rounding on tie-free samples.
    ``"product_limit"``
        The actual jumps of the completed ``F_n = 1 - exp(-Lambda_n)``,
        including the completion mass placed at ``Z_{n:n}``. This is a
        different (asymptotically equivalent) estimator.
    """
    k = s.check_k(k)
    t = _threshold(s, k)
    F = nelson_aalen_cdf(s)
    surv_t = 1.0 - F(t)
    if not surv_t > 0:
        raise NumericError("empirical survival vanished at the threshold")

    if measure == "derivation":
        H1 = empirical_subdist(s, 1)
        H0 = empirical_subdist(s, 0)
        H = empirical_cdf(s)
        at_risk = 1.0 - H.left_limit(H1.knots)
        censored_hazard = np.cumsum(H0.jumps() / at_risk)
        mass = H1.jumps() * np.exp(censored_hazard)
    elif measure == "product_limit":
        mass = F.jumps().copy()
        mass[-1] += 1.0 - F.values[-1]
    else:
        raise DomainError(f"measure must be 'derivation' or 'product_limit', got {measure!r}")

    knots = F.knots
    above = knots > t
    value = math.fsum(mass[above] * np.log(knots[above] / t)) / surv_t
    return EviEstimate("NEW_INTEGRAL", value, k, s.n, p_hat=p_hat(s, k))


def _km_tail_quantities(s: OrderedSample, k: int):
    """``n * (1 - F_KM(Z_{n-k:n}))`` and ``1 - G_KM(Z'_i -)`` for ``i = 1..k``."""
    zs = s.z_sorted
    surv_f = product_limit_survival(s.delta_concomitant)
    surv_g = product_limit_survival(1.0 - s.delta_concomitant)
    t = s.top(k + 1)
    scale = s.n * surv_f[np.searchsorted(zs, t, side="right") - 1]
    if not scale > 0:
        raise NumericError("Kaplan-Meier survival of F vanished at the threshold", index=s.n - k)
    before = np.searchsorted(zs, s.z_desc[:k], side="left") - 1
    g_left = np.where(before >= 0, surv_g[np.maximum(before, 0)], 1.0)
    return scale, g_left


def _check_g(g_left, needed):
    bad = np.flatnonzero(needed & ~(g_left > 0))
    if bad.size:
        raise NumericError("Kaplan-Meier survival of G vanished", index=int(bad[0]) + 1)


def worms_w1(s: OrderedSample, k: int) -> EviEstimate:
    """``sum delta'_i log(Z'_i / Z'_{k+1}) / (1 - G_KM(Z'_i -))``, normalised by ``n (1 - F_KM(Z_{n-k:n}))``."""
    k = s.check_k(k)
    excess = _log_excesses(s, k)
    scale, g_left = _km_tail_quantities(s, k)
    d = s.delta_desc[:k]
    _check_g(g_left, d > 0)
    terms = np.where(d > 0, d / np.where(d > 0, g_left, 1.0) * excess, 0.0)
    return EviEstimate("W1", math.fsum(terms) / scale, k, s.n)


def worms_w2(s: OrderedSample, k: int) -> EviEstimate:
    """``sum i log(Z'_i / Z'_{i+1}) / (1 - G_KM(Z'_i -))``, normalised by ``n (1 - F_KM(Z_{n-k:n}))``."""
    k = s.check_k(k)
    _threshold(s, k)
    zd = s.z_desc
    spacings = np.log(zd[:k] / zd[1 : k + 1])
    scale, g_left = _km_tail_quantities(s, k)
    _check_g(g_left, np.ones(k, dtype=bool))
    terms = np.arange(1, k + 1) * spacings / g_left
    return EviEstimate("W2", math.fsum(terms) / scale, k, s.n)


_DISPATCH = {
    "NEW": new_estimator,
    "NEW_INTEGRAL": new_estimator_integral,
    "HILL": hill,
    "EFG": efg,
    "W1": worms_w1,
    "W2": worms_w2,
}


def estimate(s: OrderedSample, k: int, method: str) -> EviEstimate:
    try:
        fn = _DISPATCH[method]
    except KeyError:
        raise DomainError(f"unknown method {method!r}; choose from {', '.join(METHODS)}") from None
    return fn(s, k)


def asymptotic_ci(
    est: EviEstimate,
    level: float = 0.95,
    p: float | None = None,
    lam: float | None = None,
    tau: float = 0.0,
) -> tuple[float, float]:
    """Plug-in normal interval from the limit law of the NEW estimator.

    The half-width is ``z * sqrt(p / (2p - 1)) * |gamma1_hat| / sqrt(k)``. ``p``
    defaults to the estimate's ``p_hat``. The asymptotic bias
    ``lam / (1 - tau)`` is only removed when ``lam`` is given; otherwise it is
    ignored, which is what one gets without a second-order estimate.
    """
    if est.method not in ("NEW", "NEW_INTEGRAL"):
        raise DomainError("asymptotic intervals are only available for the NEW estimator")
    if not 0.0 <= level < 1.0:
        raise DomainError(f"level must lie in [0, 1), got {level!r}")
    if p is None:
        p = est.p_hat
    if p is None or not p > 0.5:
        raise DomainError(f"p must exceed 1/2 for a finite asymptotic variance, got {p!r}")
    p = min(float(p), 1.0)
    centre = est.gamma1_hat
    if lam is not None:
        if not tau <= 0:
            raise DomainError(f"tau must be <= 0, got {tau!r}")
        centre -= lam / (1.0 - tau) / math.sqrt(est.k)
    half = NormalDist().inv_cdf(0.5 + level / 2.0) * math.sqrt(p / (2.0 * p - 1.0)) * abs(est.gamma1_hat)
    half /= math.sqrt(est.k)
    return centre - half, centre + half


def with_ci(est: EviEstimate, level: float = 0.95, **kwargs) -> EviEstimate:
    lo, hi = asymptotic_ci(est, level, **kwargs)
    return replace(est, ci=(lo, hi, level))


def estimate_curves(s: OrderedSample, ks, methods=("NEW", "W1", "W2")) -> dict[str, np.ndarray]:
    """Vectorised estimates for many ``k`` at once; NaN where an estimator is undefined.

    Cumulative sums over the descending sample give every ``k`` in O(n) total.
    Results agree with the per-``k`` functions up to rounding.
    """
    ks = np.asarray(ks, dtype=int)
    n = s.n
    if ks.size == 0 or ks.min() < 1 or ks.max() > n - 1:
        raise DomainError(f"every k must satisfy 1 <= k <= n-1 = {n - 1}")
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise DomainError(f"unknown methods {sorted(unknown)}")
    kmax = int(ks.max())
    zd = s.z_desc[: kmax + 1]
    dd = s.delta_desc[: kmax + 1]
    ok = zd[ks] > 0
    out: dict[str, np.ndarray] = {}

    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.log(zd)
        cum_L = np.cumsum(L[:kmax])
        cum_d = np.cumsum(dd[:kmax])
        hill_k = (cum_L[ks - 1] - ks * L[ks]) / ks
        ph = cum_d[ks - 1] / ks

        if "HILL" in methods:
            out["HILL"] = np.where(ok, hill_k, np.nan)
        if "EFG" in methods:
            out["EFG"] = np.where(ok & (ph > 0), hill_k / ph, np.nan)

        if "NEW" in methods:
            j = np.arange(1, n + 1, dtype=float)
            harmonic_tail = _suffix_sum(1.0 / j)
            event_tail = np.append(_suffix_sum(s.delta_desc / j), 0.0)
            b = dd[:kmax] * np.exp(harmonic_tail[:kmax] - event_tail[:kmax])
            num = np.cumsum(b * L[:kmax])[ks - 1] - L[ks] * np.cumsum(b)[ks - 1]
            out["NEW"] = np.where(ok, np.exp(event_tail[ks]) / n * num, np.nan)

        if "NEW_INTEGRAL" in methods:
            vals = []
            for k, good in zip(ks, ok):
                vals.append(new_estimator_integral(s, int(k)).gamma1_hat if good else np.nan)
            out["NEW_INTEGRAL"] = np.array(vals)

        if "W1" in methods or "W2" in methods:
            zs = s.z_sorted
            surv_f = product_limit_survival(s.delta_concomitant)
            surv_g = product_limit_survival(1.0 - s.delta_concomitant)
            scale = n * surv_f[np.searchsorted(zs, zd[ks], side="right") - 1]
            before = np.searchsorted(zs, zd[:kmax], side="left") - 1
            g_left = np.where(before >= 0, surv_g[np.maximum(before, 0)], 1.0)
            good = ok & (scale > 0)
            if "W1" in methods:
                t1 = dd[:kmax] / g_left
                num = np.cumsum(t1 * L[:kmax])[ks - 1] - L[ks] * np.cumsum(t1)[ks - 1]
                out["W1"] = np.where(good, num / scale, np.nan)
            if "W2" in methods:
                t2 = np.arange(1, kmax + 1) * (L[:kmax] - L[1 : kmax + 1]) / g_left
                out["W2"] = np.where(good, np.cumsum(t2)[ks - 1] / scale, np.nan)

    return {m: out[m] for m in methods}
