"""Bias/MSE experiments on simulated censored samples.

Replicate ``r`` draws from its own generator seeded with
``SeedSequence(seed, spawn_key=(r,))``, so each replicate is reproducible on
its own and independent of every other. Replicates are grouped into chunks of
fixed size; per-chunk sums are merged in chunk order, which keeps results
bit-identical whatever the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .asymptotics import LimitLawParams, efg_limit_variance, limit_variance
from .empirical import CensoredSample, order_sample
from .errors import ConfigError, DomainError
from .estimators import METHODS, estimate_curves
from .models import BurrModel, FrechetModel, ParetoModel

__all__ = [
    "McConfig",
    "McCell",
    "McResult",
    "VarianceReport",
    "default_k_grid",
    "run_experiment",
    "variance_check",
    "replicate_sample",
]

MODEL_FAMILIES = ("burr", "pareto", "frechet")
CHUNK_SIZE = 50


def default_k_grid(n: int, k_min: int = 5, max_points: int = 150) -> tuple[int, ...]:
    """Integers in ``[k_min, n // 2]``, thinned by a constant stride to at most ``max_points``."""
    k_max = n // 2
    if k_max < k_min:
        return tuple(range(1, max(n // 2, 1) + 1))
    count = k_max - k_min + 1
    step = math.ceil(count / max_points)
    return tuple(range(k_min, k_max + 1, step))


@dataclass(frozen=True)
class McConfig:
    """One simulation cell.

    ``p`` is the proportion of uncensored upper extremes; ``p == 1`` switches
    censoring off entirely. For ``model="burr"`` the shapes ``eta1``/``eta2``
    apply to the variable of interest and the censoring variable; other
    families ignore them.
    """

    gamma1: float
    p: float
    n: int
    replicates: int
    seed: int
    k_grid: tuple[int, ...] | None = None
    estimators: tuple[str, ...] = ("NEW", "W1", "W2")
    eta1: float = 0.25
    eta2: float = 0.25
    model: str = "burr"

    def __post_init__(self):
        if not (isinstance(self.gamma1, (int, float)) and self.gamma1 > 0):
            raise ConfigError("gamma1", f"must be positive, got {self.gamma1!r}")
        if not (0.5 < self.p <= 1.0):
            raise ConfigError("p", f"must satisfy 1/2 < p <= 1, got {self.p!r}")
        if int(self.n) != self.n or self.n < 2:
            raise ConfigError("n", f"must be an integer >= 2, got {self.n!r}")
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ConfigError("replicates", f"must be a positive integer, got {self.replicates!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be a 64-bit non-negative integer, got {self.seed!r}")
        if self.model not in MODEL_FAMILIES:
            raise ConfigError("model", f"must be one of {MODEL_FAMILIES}, got {self.model!r}")
        for name in ("eta1", "eta2"):
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be positive")
        grid = default_k_grid(int(self.n)) if self.k_grid is None else tuple(int(k) for k in self.k_grid)
        if not grid:
            raise ConfigError("k_grid", "must not be empty")
        if any(not 1 <= k < self.n for k in grid):
            raise ConfigError("k_grid", f"every k must satisfy 1 <= k < n = {self.n}")
        if list(grid) != sorted(set(grid)):
            raise ConfigError("k_grid", "must be strictly increasing")
        est = tuple(self.estimators)
        if not est or any(m not in METHODS for m in est):
            raise ConfigError("estimators", f"must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "k_grid", grid)
        object.__setattr__(self, "estimators", est)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "replicates", int(self.replicates))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def censored(self) -> bool:
        return self.p < 1.0

    @property
    def gamma2(self) -> float:
        return math.inf if not self.censored else self.p * self.gamma1 / (1.0 - self.p)

    def models(self):
        """``(model of X, model of Y or None)``."""
        def make(gamma, eta):
            if self.model == "burr":
                return BurrModel(eta, gamma)
            if self.model == "pareto":
                return ParetoModel(gamma)
            return FrechetModel(gamma)

        x = make(self.gamma1, self.eta1)
        y = make(self.gamma2, self.eta2) if self.censored else None
        return x, y

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k_grid"] = list(self.k_grid)
        d["estimators"] = list(self.estimators)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "McConfig":
        d = dict(d)
        if d.get("k_grid") is not None:
            d["k_grid"] = tuple(d["k_grid"])
        if "estimators" in d:
            d["estimators"] = tuple(d["estimators"])
        return cls(**d)


def _replicate_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))


def replicate_sample(cfg: McConfig, r: int) -> CensoredSample:
    """The censored sample of replicate ``r``: X drawn first, then Y, from the same substream."""
    rng = _replicate_rng(cfg.seed, r)
    xm, ym = cfg.models()
    x = xm.sample(rng, cfg.n)
    if ym is None:
        return CensoredSample(x, np.ones(cfg.n))
    return CensoredSample.from_latent(x, ym.sample(rng, cfg.n))


def _replicate_estimates(cfg, r, ks, methods):
    return estimate_curves(order_sample(replicate_sample(cfg, r)), ks, methods)


def _worker_count(workers):
    if workers is None:
        env = os.environ.get("CENSTAIL_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def _map_chunks(fn, replicates, workers):
    starts = range(0, replicates, CHUNK_SIZE)
    bounds = [(s, min(s + CHUNK_SIZE, replicates)) for s in starts]
    workers = min(_worker_count(workers), len(bounds))
    if workers == 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))


@dataclass(frozen=True)
class McCell:
    method: str
    k: int
    abs_bias: float
    mse: float
    mean_estimate: float
    effective: int


@dataclass(frozen=True)
class McResult:
    config: McConfig
    cells: tuple[McCell, ...] = field(repr=False)

    CSV_HEADER = ("method", "k", "abs_bias", "mse", "mean_estimate", "effective")

    def curve(self, method: str) -> dict[str, np.ndarray]:
        rows = [c for c in self.cells if c.method == method]
        if not rows:
            raise KeyError(method)
        return {
            "k": np.array([c.k for c in rows]),
            "abs_bias": np.array([c.abs_bias for c in rows]),
            "mse": np.array([c.mse for c in rows]),
            "mean_estimate": np.array([c.mean_estimate for c in rows]),
            "effective": np.array([c.effective for c in rows]),
        }

    def best(self, method: str, metric: str = "mse") -> tuple[int, float]:
        """``(k, value)`` at the smallest ``metric`` over the grid (first k on ties; NaN skipped)."""
        c = self.curve(method)
        vals = c[metric]
        if np.all(np.isnan(vals)):
            return -1, math.nan
        i = int(np.nanargmin(vals))
        return int(c["k"][i]), float(vals[i])

    def rows(self):
        for c in self.cells:
            yield (c.method, c.k, c.abs_bias, c.mse, c.mean_estimate, c.effective)


def run_experiment(cfg: McConfig, workers: int | None = None) -> McResult:
    """Bias and MSE of every requested estimator at every k, averaged over replicates.

    A replicate where an estimator is undefined at some k (for instance no
    uncensored point among the top k) is left out of that cell only; the cell's
    ``effective`` count records how many replicates contributed.
    """
    ks = np.asarray(cfg.k_grid)
    methods = cfg.estimators
    shape = (len(methods), ks.size)

    def chunk(lo, hi):
        count = np.zeros(shape, dtype=np.int64)
        s1 = np.zeros(shape)
        s2 = np.zeros(shape)
        for r in range(lo, hi):
            est = _replicate_estimates(cfg, r, ks, methods)
            err = np.stack([est[m] for m in methods]) - cfg.gamma1
            good = np.isfinite(err)
            err = np.where(good, err, 0.0)
            count += good
            s1 += err
            s2 += err * err
        return count, s1, s2

    count = np.zeros(shape, dtype=np.int64)
    s1 = np.zeros(shape)
    s2 = np.zeros(shape)
    for c, a, b in _map_chunks(chunk, cfg.replicates, workers):
        count += c
        s1 += a
        s2 += b

    cells = []
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_err = s1 / count
        mse = s2 / count
    for i, m in enumerate(methods):
        for j, k in enumerate(ks):
            ok = count[i, j] > 0
            cells.append(
                McCell(
                    method=m,
                    k=int(k),
                    abs_bias=float(abs(mean_err[i, j])) if ok else math.nan,
                    mse=float(mse[i, j]) if ok else math.nan,
                    mean_estimate=float(cfg.gamma1 + mean_err[i, j]) if ok else math.nan,
                    effective=int(count[i, j]),
                )
            )
    return McResult(cfg, tuple(cells))


@dataclass(frozen=True)
class VarianceReport:
    """Spread of ``sqrt(k) (gamma1_hat - gamma1)`` over replicates against its limit variance."""

    method: str
    k: int
    effective: int
    mean_scaled: float
    mean_se: float
    var_scaled: float
    var_se: float
    target_variance: float
    ratio: float
    ratio_se: float
    scaled_errors: np.ndarray = field(repr=False)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("scaled_errors")
        return d


def variance_check(cfg: McConfig, k_star: int, method: str = "NEW", workers: int | None = None) -> VarianceReport:
    """Empirical variance of ``sqrt(k) (gamma1_hat - gamma1)`` at ``k_star`` versus the limit law.

    The target is ``p gamma1^2 / (2p - 1)`` for NEW/NEW_INTEGRAL,
    ``gamma1^2 / p`` for EFG and, without censoring only, ``gamma1^2`` for
    HILL. Fewer than 100 usable replicates is refused.
    """
    if k_star not in cfg.k_grid:
        raise DomainError(f"k_star={k_star} is not in the configured k grid")
    params = LimitLawParams(cfg.gamma1, cfg.p)
    if method in ("NEW", "NEW_INTEGRAL"):
        target = limit_variance(params)
    elif method == "EFG" or (method == "HILL" and not cfg.censored):
        target = efg_limit_variance(params)
    else:
        raise DomainError(f"no limit variance available for method {method!r}")
    ks = np.array([k_star])

    def chunk(lo, hi):
        return np.array([_replicate_estimates(cfg, r, ks, (method,))[method][0] for r in range(lo, hi)])

    est = np.concatenate(_map_chunks(chunk, cfg.replicates, workers))
    est = est[np.isfinite(est)]
    if est.size < 100:
        raise DomainError(f"only {est.size} usable replicates; at least 100 are needed for a variance check")
    scaled = math.sqrt(k_star) * (est - cfg.gamma1)
    centred = scaled - scaled.mean()
    var = float(centred @ centred) / (scaled.size - 1)
    m4 = float(np.mean(centred**4))
    var_se = math.sqrt(max(m4 - var * var, 0.0) / scaled.size)
    return VarianceReport(
        method=method,
        k=int(k_star),
        effective=int(scaled.size),
        mean_scaled=float(scaled.mean()),
        mean_se=math.sqrt(var / scaled.size),
        var_scaled=var,
        var_se=var_se,
        target_variance=target,
        ratio=var / target,
        ratio_se=var_se / target,
        scaled_errors=scaled,
    )
