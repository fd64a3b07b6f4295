import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from censtail.asymptotics import (
    LimitLawParams,
    limit_variance,
    limit_variance_terms,
    weighted_brownian_integral_variance,
)
from censtail.empirical import CensoredSample, order_sample
from censtail.errors import DomainError
from censtail.limits import (
    brownian_paths,
    d_n_curve,
    geometric_grid,
    limit_check,
    power_weights,
    quadrature_variance,
    simulate_limit_rvs,
    simulate_tail_process,
)


def ordered(z, d=None):
    z = np.asarray(z, dtype=float)
    return order_sample(CensoredSample(z, np.ones(z.size) if d is None else d))


def pareto_quantile_grid(n, gamma):
    u = np.arange(1, n + 1) / (n + 1)
    return ordered((1 - u) ** -gamma)


class TestDnCurve:
    S = ordered(np.random.default_rng(4).random(200) ** -0.5, np.random.default_rng(5).random(200) < 0.8)

    def test_zero_at_one(self):
        c = d_n_curve(self.S, 20, 0.5, [0.9, 1.0, 1.7])
        assert c.d_values[1] == 0.0

    def test_beyond_sample_max(self):
        x = 1.01 * self.S.top(1) / self.S.top(21)
        c = d_n_curve(self.S, 20, 0.5, [x])
        assert c.d_values[0] == pytest.approx(-math.sqrt(20) * x**-2.0, rel=1e-14)

    def test_pareto_quantile_envelope(self):
        c = d_n_curve(pareto_quantile_grid(10_000, 1.0), 100, 1.0, [2.0])
        assert abs(c.d_values[0]) <= 4 / math.sqrt(100)

    def test_domain_lower_bound(self):
        with pytest.raises(DomainError):
            d_n_curve(self.S, 20, 0.5, [0.5, 1.0], p=0.9, gamma=0.45)
        d_n_curve(self.S, 20, 0.5, [0.96, 1.0], p=0.9, gamma=0.45)

    @pytest.mark.parametrize("grid", [[], [2.0, 1.0], [0.0, 1.0], [1.0, np.inf]])
    def test_bad_grid(self, grid):
        with pytest.raises(DomainError):
            d_n_curve(self.S, 20, 0.5, grid)

    def test_piecewise_constant_between_atoms(self):
        # the empirical ratio only moves when x t crosses an observation
        t = self.S.top(21)
        z = np.sort(self.S.z_sorted[self.S.z_sorted > t])
        lo, hi = z[3] / t, z[4] / t
        xs = np.linspace(lo, hi, 7)[:-1]
        c = d_n_curve(self.S, 20, 0.5, xs)
        ratio = c.d_values / math.sqrt(20) + xs**-2.0
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-13)


class TestQuadrature:
    def test_geometric_grid(self):
        g = geometric_grid(1000)
        assert g[0] == 0.0 and g[1] == pytest.approx(1e-8) and g[-1] == 1.0
        assert g.size == 1001
        assert np.all(np.diff(g) > 0)

    def test_grid_doubling_nests(self):
        fine, coarse = geometric_grid(1999), geometric_grid(1000)
        np.testing.assert_allclose(fine[np.r_[0, 1:fine.size:2]], coarse, rtol=1e-12)

    @pytest.mark.parametrize("a", [0.3, 1.1, 1.45])
    def test_exact_for_linear_functions(self, a):
        # int_0^1 s^-a (2 s) ds = 2 / (2 - a); piecewise-linear interpolation is exact for a linear path
        t = geometric_grid(50, 1e-3)
        assert power_weights(t, a) @ (2 * t) == pytest.approx(2 / (2 - a), rel=1e-12)

    @pytest.mark.parametrize("q,s_min", [(0.0, 1e-8), (0.1, 1e-8), (0.3, 1e-8), (0.45, 1e-40)])
    def test_quadrature_variance_converges(self, q, s_min):
        # near q = 1/2 the mass below the first cell decays like s_min^(1/2 - q), so s_min must shrink
        exact = weighted_brownian_integral_variance(q)
        assert quadrature_variance(geometric_grid(4000, s_min), 1 + q) == pytest.approx(exact, rel=2e-3)

    def test_truncation_loss_near_half(self):
        exact = weighted_brownian_integral_variance(0.45)
        assert quadrature_variance(geometric_grid(4000, 1e-8), 1.45) < 0.9 * exact

    def test_integral_variance_domain(self):
        with pytest.raises(DomainError):
            weighted_brownian_integral_variance(0.5)

    def test_brownian_paths_start_at_zero(self):
        b = brownian_paths(np.linspace(0, 1, 11), 5, np.random.default_rng(0))
        assert np.all(b.values[:, 0] == 0.0) and b.values.shape == (5, 11)


class TestLimitVariance:
    def test_examples(self):
        assert limit_variance(LimitLawParams(0.2, 0.9)) == pytest.approx(0.045, rel=1e-14)
        assert limit_variance(LimitLawParams(0.5, 1.0)) == pytest.approx(0.25, rel=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(g1=st.floats(0.01, 5.0), p=st.floats(0.501, 1.0))
    def test_four_terms_sum(self, g1, p):
        params = LimitLawParams(g1, p)
        total = math.fsum(limit_variance_terms(params).values())
        gamma = p * g1
        assert total == pytest.approx(limit_variance(params), rel=1e-12)
        assert gamma**2 / (p * (2 * p - 1)) == pytest.approx(limit_variance(params), rel=1e-12)

    def test_term_values(self):
        t = limit_variance_terms(LimitLawParams(0.2, 0.9))
        g, q = 0.18, 0.1
        assert t["var_c1"] == pytest.approx(2 * q * g * g / (2 * q * q - 3 * q + 1), rel=1e-14)
        assert t["var_c3"] == pytest.approx(0.2**2 * 0.9, rel=1e-14)


class TestSimulation:
    PARAMS = LimitLawParams(0.2, 0.9)

    def test_rejects_divergent_q(self):
        # q >= 1/2 cannot even be parameterised
        with pytest.raises(DomainError, match="p must satisfy"):
            LimitLawParams(0.2, 0.5)

    def test_rejects_small_grid_and_reps(self):
        with pytest.raises(DomainError):
            simulate_limit_rvs(self.PARAMS, 999, 10, np.random.default_rng(0))
        with pytest.raises(DomainError):
            simulate_limit_rvs(self.PARAMS, 1000, 0, np.random.default_rng(0))

    def test_total_is_sum(self):
        s = simulate_limit_rvs(self.PARAMS, 1000, 50, np.random.default_rng(1))
        np.testing.assert_array_equal(s.total, s.c1 + s.c2 + s.c3)
        assert len(s) == 50

    def test_deterministic(self):
        a = simulate_limit_rvs(self.PARAMS, 1000, 20, np.random.default_rng(9))
        b = simulate_limit_rvs(self.PARAMS, 1000, 20, np.random.default_rng(9))
        np.testing.assert_array_equal(a.total, b.total)

    def test_limit_check_small(self):
        rep = limit_check(self.PARAMS, 1000, 20_000, np.random.default_rng(2))
        for key in ("c1", "c3", "total"):
            assert abs(rep.fine[key] - rep.analytic[key]) <= 4 * rep.stderr[key]
        assert abs(rep.fine["cov_c1_c2"]) <= 3 * rep.stderr["cov_c1_c2"]
        assert abs(rep.fine["total"] - rep.coarse["total"]) < rep.stderr["total"]
        assert rep.quadrature["fine"] == pytest.approx(rep.quadrature["exact"], rel=1e-4)

    def test_tail_process_uncensored_variance(self):
        # with p = 1, J(x) = x^(-1/g) B(1) - B(x^(-1/g)) up to sign: variance s (1 - s), s = x^(-1/g)
        params = LimitLawParams(0.5, 1.0)
        x = np.array([1.0, 1.5, 2.0, 4.0])
        j = simulate_tail_process(params, x, 20_000, np.random.default_rng(3))
        s = x**-2.0
        np.testing.assert_allclose(j.var(axis=0)[1:], (s * (1 - s))[1:], rtol=0.06)
        assert np.all(j[:, 0] == 0.0)

    def test_tail_process_domain(self):
        with pytest.raises(DomainError):
            simulate_tail_process(self.PARAMS, [0.5], 10, np.random.default_rng(0))
