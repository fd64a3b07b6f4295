"""Tail product-limit process and simulation of its Gaussian limit.

After Brownian rescaling ``sqrt(n/k) W(k s / n) -> B(s)``, the limit of
``sqrt(k) (gamma1_hat - gamma1)`` becomes ``C1 + C2 + C3`` with

    C1 = gamma sqrt(q)            int_0^1 s^(-q-1) B2(s) ds
    C2 = gamma (1 - q/p) sqrt(p)  int_0^1 s^(-q-1) B1(s) ds
    C3 = -gamma1 sqrt(p) B1(1)

for independent standard Brownian motions ``B1`` and ``B2``. The weighted
integrals are singular at 0 (integrand ~ s^(-q-1/2)) and are evaluated on a
geometric grid by integrating ``s^(-a)`` exactly against the piecewise-linear
interpolant of the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import LimitLawParams, limit_variance, limit_variance_terms
from .empirical import OrderedSample, nelson_aalen_cdf
from .errors import DomainError, NumericError

__all__ = [
    "TailProcessCurve",
    "BrownianPath",
    "GaussianLimitSample",
    "LimitCheckReport",
    "d_n_curve",
    "geometric_grid",
    "brownian_paths",
    "power_weights",
    "quadrature_variance",
    "simulate_limit_rvs",
    "limit_check",
    "simulate_tail_process",
    "limit_variance",
    "limit_variance_terms",
]


@dataclass(frozen=True)
class TailProcessCurve:
    x_grid: np.ndarray
    d_values: np.ndarray
    k: int
    n: int


def d_n_curve(
    s: OrderedSample,
    k: int,
    gamma1: float,
    x_grid,
    p: float | None = None,
    gamma: float | None = None,
) -> TailProcessCurve:
    """``D_n(x) = sqrt(k) (Fbar_n(x t) / Fbar_n(t) - x^(-1/gamma1))`` with ``t = Z_{n-k:n}``.

    ``Fbar_n`` is the completed Nelson-Aalen survival (zero beyond the sample
    maximum). If both ``p`` and ``gamma`` are given the grid is checked against
    the lower bound ``p ** gamma``.
    """
    k = s.check_k(k)
    if not gamma1 > 0:
        raise DomainError("gamma1 must be positive")
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("x_grid must be a non-empty 1-d array of positive reals")
    if np.any(np.diff(x) <= 0):
        raise DomainError("x_grid must be strictly increasing")
    if p is not None and gamma is not None and x[0] < p**gamma:
        raise DomainError(f"x_grid starts below p**gamma = {p**gamma:.6g}")
    t = s.top(k + 1)
    F = nelson_aalen_cdf(s)
    surv_t = 1.0 - F(t)
    if not surv_t > 0:
        raise NumericError("empirical survival vanished at the threshold")
    ratio = (1.0 - F(x * t)) / surv_t
    d = math.sqrt(k) * (ratio - x ** (-1.0 / gamma1))
    return TailProcessCurve(x, d, k, s.n)


@dataclass(frozen=True)
class BrownianPath:
    times: np.ndarray
    values: np.ndarray  # shape (reps, len(times)); values[:, 0] == 0


def geometric_grid(m: int, s_min: float = 1e-8) -> np.ndarray:
    """``0`` followed by ``m`` geometrically spaced points from ``s_min`` to ``1``.

    Taking every other positive point of ``geometric_grid(2m - 1)`` gives
    ``geometric_grid(m)``, which is what the refinement check relies on.
    """
    if m < 2:
        raise DomainError("need at least two grid points")
    if not 0 < s_min < 1:
        raise DomainError("s_min must lie in (0, 1)")
    pos = np.exp(np.linspace(math.log(s_min), 0.0, m))
    pos[-1] = 1.0
    return np.concatenate([[0.0], pos])


def brownian_paths(times, reps: int, rng: np.random.Generator) -> BrownianPath:
    times = np.asarray(times, dtype=float)
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise DomainError("times must start at 0 and increase strictly")
    dt = np.diff(times)
    steps = rng.standard_normal((reps, dt.size)) * np.sqrt(dt)
    values = np.concatenate([np.zeros((reps, 1)), np.cumsum(steps, axis=1)], axis=1)
    return BrownianPath(times, values)


def _power_antiderivative(lo, hi, e):
    """``int_lo^hi s**e ds`` (elementwise)."""
    if e == -1.0:
        return np.log(hi / lo)
    return (hi ** (e + 1.0) - lo ** (e + 1.0)) / (e + 1.0)


def power_weights(times, a: float) -> np.ndarray:
    """Weights ``w`` with ``int_{t_0}^{t_m} s^(-a) L(s) ds = sum_i w[i] L(t_i)``.

    ``L`` is the piecewise-linear interpolant of values at ``times``. When
    ``times[0] == 0`` the value there must be 0 (Brownian start) and only the
    ``s^(1-a)`` part of the first cell is needed, which is finite for ``a < 2``.
    """
    t = np.asarray(times, dtype=float)
    w = np.zeros(t.size)
    lo, hi = t[:-1], t[1:]
    h = hi - lo
    start = 1 if t[0] == 0 else 0
    if start:
        if not a < 2:
            raise DomainError("integral diverges at 0 unless a < 2")
        w[1] += t[1] ** (1.0 - a) / (2.0 - a)
    lo, hi, h = lo[start:], hi[start:], h[start:]
    m0 = _power_antiderivative(lo, hi, -a)
    m1 = _power_antiderivative(lo, hi, 1.0 - a)
    w[start:-1] += (hi * m0 - m1) / h
    w[start + 1 :] += (m1 - lo * m0) / h
    return w


def _increment_loadings(times, a):
    """Vector ``c * sqrt(dt)`` so that the integral equals ``Z @ loadings`` for i.i.d. N(0,1) ``Z``."""
    w = power_weights(times, a)[1:]
    tail = np.cumsum(w[::-1])[::-1]
    return tail * np.sqrt(np.diff(times))


def quadrature_variance(times, a: float) -> float:
    """Exact variance of the discretised ``int s^(-a) B(s) ds`` (no Monte Carlo)."""
    loadings = _increment_loadings(times, a)
    return float(loadings @ loadings)


@dataclass(frozen=True)
class GaussianLimitSample:
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.c1 + self.c2 + self.c3

    def __len__(self):
        return self.c1.size


def _check_limit_inputs(params, m, reps):
    if not params.q < 0.5:
        raise DomainError("q must be < 1/2, i.e. p > 1/2; the weighted integral diverges otherwise")
    if m < 1000:
        raise DomainError(f"grid size m must be at least 1000, got {m}")
    if int(reps) != reps or reps < 1:
        raise DomainError(f"reps must be a positive integer, got {reps!r}")


def _simulate_on_grids(params, grids, reps, rng, chunk):
    """Draw ``reps`` copies of (C1, C2, C3) on the finest grid; coarser grids reuse the same paths.

    ``grids`` is a list of index arrays into the finest grid (all starting with 0).
    """
    fine = grids[0]
    a = 1.0 + params.q
    g, g1, p, q = params.gamma, params.gamma1, params.p, params.q
    columns = []
    for times in grids[1]:
        loadings = _increment_loadings(times, a)
        # coarse increments are sums of consecutive fine increments
        idx = np.searchsorted(times, fine[1:], side="left") - 1
        columns.append(loadings[idx] * np.sqrt(np.diff(fine)) / np.sqrt(np.diff(times))[idx])
    integrals = np.stack(columns, axis=1)
    unit = np.sqrt(np.diff(fine))
    out = [[[], [], []] for _ in columns]
    done = 0
    while done < reps:
        size = min(chunk, reps - done)
        z1 = rng.standard_normal((size, unit.size))
        z2 = rng.standard_normal((size, unit.size))
        i1 = z1 @ integrals
        i2 = z2 @ integrals
        b1_end = z1 @ unit
        for j in range(len(columns)):
            out[j][0].append(g * math.sqrt(q) * i2[:, j])
            out[j][1].append(g * (1.0 - q / p) * math.sqrt(p) * i1[:, j])
            out[j][2].append(-g1 * math.sqrt(p) * b1_end)
        done += size
    return [GaussianLimitSample(*(np.concatenate(part) for part in parts)) for parts in out]


def simulate_limit_rvs(
    params: LimitLawParams,
    m: int,
    reps: int,
    rng: np.random.Generator,
    s_min: float = 1e-8,
    chunk: int = 2000,
) -> GaussianLimitSample:
    """Simulate ``reps`` independent draws of ``(C1, C2, C3)`` on an ``m``-point grid."""
    _check_limit_inputs(params, m, reps)
    times = geometric_grid(m, s_min)
    return _simulate_on_grids(params, (times, [times]), reps, rng, chunk)[0]


@dataclass(frozen=True)
class LimitCheckReport:
    """Simulated against analytic variances of the limit variables.

    ``fine`` holds the run on the refined grid, ``coarse`` the same Brownian
    paths restricted to the original grid.
    """

    params: LimitLawParams
    m: int
    reps: int
    analytic: dict
    fine: dict
    coarse: dict
    stderr: dict
    quadrature: dict

    def as_dict(self) -> dict:
        return {
            "gamma1": self.params.gamma1,
            "p": self.params.p,
            "m": self.m,
            "reps": self.reps,
            "analytic": self.analytic,
            "simulated": self.fine,
            "simulated_coarse_grid": self.coarse,
            "mc_stderr": self.stderr,
            "quadrature_variance": self.quadrature,
        }


def _variance_stderr(x):
    """Sample variance and its large-sample standard error ``sqrt((m4 - v^2) / n)``."""
    x = np.asarray(x)
    centred = x - x.mean()
    v = float(centred @ centred) / (x.size - 1)
    m4 = float(np.mean(centred**4))
    return v, math.sqrt(max(m4 - v * v, 0.0) / x.size)


def limit_check(
    params: LimitLawParams,
    m: int,
    reps: int,
    rng: np.random.Generator,
    s_min: float = 1e-8,
    chunk: int = 2000,
) -> LimitCheckReport:
    """Compare simulated variances of ``C1``, ``C3`` and ``C1 + C2 + C3`` with closed forms.

    Paths are drawn on the refined grid ``geometric_grid(2m - 1)`` and the
    same paths are integrated on ``geometric_grid(m)``, so the difference
    between the two runs isolates discretisation error.
    """
    _check_limit_inputs(params, m, reps)
    fine_times = geometric_grid(2 * m - 1, s_min)
    coarse_times = fine_times[np.r_[0, 1 : fine_times.size : 2]]
    fine, coarse = _simulate_on_grids(params, (fine_times, [fine_times, coarse_times]), reps, rng, chunk)
    terms = limit_variance_terms(params)
    analytic = {"c1": terms["var_c1"], "c3": terms["var_c3"], "total": limit_variance(params)}

    def summary(sample):
        vals, errs = {}, {}
        for name, arr in (("c1", sample.c1), ("c3", sample.c3), ("total", sample.total)):
            vals[name], errs[name] = _variance_stderr(arr)
        vals["cov_c1_c2"] = float(np.cov(sample.c1, sample.c2)[0, 1])
        errs["cov_c1_c2"] = float(np.std(sample.c1) * np.std(sample.c2) / math.sqrt(len(sample)))
        return vals, errs

    fine_vals, errs = summary(fine)
    coarse_vals, _ = summary(coarse)
    a = 1.0 + params.q
    quad = {
        "fine": quadrature_variance(fine_times, a),
        "coarse": quadrature_variance(coarse_times, a),
        "exact": 2.0 / ((1.0 - params.q) * (1.0 - 2.0 * params.q)),
    }
    return LimitCheckReport(params, m, reps, analytic, fine_vals, coarse_vals, errs, quad)


def simulate_tail_process(
    params: LimitLawParams,
    x_grid,
    reps: int,
    rng: np.random.Generator,
    m: int = 2000,
) -> np.ndarray:
    """Draws of the limiting process ``J(x) = J1(x) + J2(x)`` on ``x_grid``.

    In rescaled time ``s = x^(-1/gamma)``::

        J1(x) = sqrt(p) (x^(q/gamma) B1(s) - x^(-1/gamma1) B1(1))
        J2(x) = x^(-1/gamma1) int_s^1 u^(-2) (p sqrt(q) B2(u) - q sqrt(p) B1(u)) du

    Returns an array of shape ``(reps, len(x_grid))``. Grid points must be at
    least ``p ** gamma``. Intended as a diagnostic to set beside
    :func:`d_n_curve`.
    """
    x = np.asarray(x_grid, dtype=float)
    g, g1, p, q = params.gamma, params.gamma1, params.p, params.q
    if np.any(x < p**g * (1 - 1e-12)):
        raise DomainError(f"x_grid must lie in [p**gamma, inf) = [{p**g:.6g}, inf)")
    s_x = x ** (-1.0 / g)
    lo, hi = min(s_x.min(), 1.0), max(s_x.max(), 1.0)
    base = np.exp(np.linspace(math.log(lo), math.log(hi), m))
    required = np.unique(np.concatenate([s_x, [1.0]]))
    # drop filler points that would create sliver cells next to required ones
    nearest = required[np.clip(np.searchsorted(required, base), 0, required.size - 1)]
    below = required[np.clip(np.searchsorted(required, base) - 1, 0, required.size - 1)]
    gap = np.minimum(np.abs(base - nearest), np.abs(base - below))
    base = base[gap > 1e-6 * base]
    times = np.unique(np.concatenate([[0.0], base, required]))
    b1 = brownian_paths(times, reps, rng).values
    b2 = brownian_paths(times, reps, rng).values
    v = p * math.sqrt(q) * b2 - q * math.sqrt(p) * b1
    pos = times[1:]
    # cumulative exact integral of u^-2 times the linear interpolant, from times[1] upward
    lo_t, hi_t = pos[:-1], pos[1:]
    h = hi_t - lo_t
    m0 = _power_antiderivative(lo_t, hi_t, -2.0)
    m1 = _power_antiderivative(lo_t, hi_t, -1.0)
    w_left = (hi_t * m0 - m1) / h
    w_right = (m1 - lo_t * m0) / h
    vv = v[:, 1:]
    cells = vv[:, :-1] * w_left + vv[:, 1:] * w_right
    cum = np.concatenate([np.zeros((reps, 1)), np.cumsum(cells, axis=1)], axis=1)
    idx_x = np.searchsorted(pos, s_x)
    idx_1 = np.searchsorted(pos, 1.0)
    j2 = x ** (-1.0 / g1) * (cum[:, [idx_1]] - cum[:, idx_x])
    t_idx = np.searchsorted(times, s_x)
    one_idx = np.searchsorted(times, 1.0)
    j1 = math.sqrt(p) * (x ** (q / g) * b1[:, t_idx] - x ** (-1.0 / g1) * b1[:, [one_idx]])
    return j1 + j2
