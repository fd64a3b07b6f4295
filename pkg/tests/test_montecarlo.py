import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from censtail.empirical import order_sample
from censtail.errors import ConfigError, DomainError
from censtail.estimators import estimate, estimate_curves, new_estimator_weights
from censtail.montecarlo import (
    McConfig,
    default_k_grid,
    replicate_sample,
    run_experiment,
    variance_check,
)

BASE = dict(gamma1=0.2, p=0.9, n=100, replicates=20, seed=7, k_grid=(5, 10, 20, 40))


def per_replicate(cfg, methods=None):
    # oracle path: one replicate at a time through the per-k estimator functions
    methods = methods or cfg.estimators
    out = {m: np.full((cfg.replicates, len(cfg.k_grid)), np.nan) for m in methods}
    for r in range(cfg.replicates):
        s = order_sample(replicate_sample(cfg, r))
        for m in methods:
            for j, k in enumerate(cfg.k_grid):
                try:
                    out[m][r, j] = estimate(s, k, m).gamma1_hat
                except ArithmeticError:
                    pass
    return out


class TestConfig:
    @pytest.mark.parametrize(
        "field,value",
        [
            ("gamma1", -0.1),
            ("p", 0.5),
            ("p", 1.2),
            ("n", 1),
            ("replicates", 0),
            ("seed", -1),
            ("seed", 2**64),
            ("model", "lognormal"),
            ("eta1", 0.0),
            ("k_grid", (0, 5)),
            ("k_grid", (5, 100)),
            ("k_grid", (10, 5)),
            ("k_grid", ()),
            ("estimators", ("NEW", "MLE")),
        ],
    )
    def test_invalid_field_is_named(self, field, value):
        with pytest.raises(ConfigError) as info:
            McConfig(**{**BASE, field: value})
        assert info.value.field == field

    def test_uncensored_allowed(self):
        cfg = McConfig(**{**BASE, "p": 1.0})
        assert not cfg.censored and cfg.models()[1] is None

    def test_gamma2(self):
        assert McConfig(**BASE).gamma2 == pytest.approx(1.8)

    def test_default_k_grid(self):
        assert default_k_grid(300) == tuple(range(5, 151))
        big = default_k_grid(10_000)
        assert len(big) <= 150 and big[0] == 5 and big[-1] <= 5000
        assert McConfig(gamma1=0.2, p=0.9, n=300, replicates=1, seed=0).k_grid == tuple(range(5, 151))

    def test_dict_round_trip(self):
        cfg = McConfig(**BASE)
        assert McConfig.from_dict(cfg.to_dict()) == cfg


class TestRunExperiment:
    def test_single_replicate_equals_its_values(self):
        cfg = McConfig(**{**BASE, "replicates": 1, "estimators": ("NEW", "W1", "W2", "EFG")})
        res = run_experiment(cfg)
        ref = per_replicate(cfg)
        for m in cfg.estimators:
            c = res.curve(m)
            np.testing.assert_allclose(c["mean_estimate"], ref[m][0], rtol=1e-12)
            np.testing.assert_allclose(c["abs_bias"], np.abs(ref[m][0] - 0.2), rtol=1e-9, atol=1e-15)
            np.testing.assert_allclose(c["mse"], (ref[m][0] - 0.2) ** 2, rtol=1e-9, atol=1e-18)

    def test_aggregates_match_oracle(self):
        cfg = McConfig(**BASE)
        res = run_experiment(cfg)
        ref = per_replicate(cfg)
        for m in cfg.estimators:
            err = ref[m] - 0.2
            np.testing.assert_allclose(res.curve(m)["mse"], np.mean(err**2, axis=0), rtol=1e-10)
            np.testing.assert_allclose(res.curve(m)["abs_bias"], np.abs(err.mean(axis=0)), rtol=1e-8)

    def test_deterministic(self):
        cfg = McConfig(**BASE)
        assert run_experiment(cfg) == run_experiment(cfg)

    def test_thread_count_does_not_matter(self):
        cfg = McConfig(**{**BASE, "replicates": 130})
        a = list(run_experiment(cfg, workers=1).rows())
        b = list(run_experiment(cfg, workers=4).rows())
        assert a == b

    def test_env_var_caps_workers(self, monkeypatch):
        monkeypatch.setenv("CENSTAIL_THREADS", "3")
        cfg = McConfig(**{**BASE, "replicates": 120})
        assert list(run_experiment(cfg).rows()) == list(run_experiment(cfg, workers=1).rows())

    def test_substreams(self):
        cfg = McConfig(**BASE)
        a, b = replicate_sample(cfg, 3), replicate_sample(cfg, 4)
        assert not np.array_equal(a.z, b.z)
        # a replicate does not depend on how many others are run
        other = McConfig(**{**BASE, "replicates": 500})
        assert np.array_equal(replicate_sample(other, 3).z, a.z)

    def test_missing_values_are_counted(self):
        cfg = McConfig(gamma1=0.2, p=0.55, n=50, replicates=300, seed=1, k_grid=(1, 2, 5), estimators=("EFG", "NEW"))
        res = run_experiment(cfg)
        ref = per_replicate(cfg)
        eff = res.curve("EFG")["effective"]
        np.testing.assert_array_equal(eff, np.isfinite(ref["EFG"]).sum(axis=0))
        assert eff[0] < cfg.replicates
        assert np.all(res.curve("NEW")["effective"] == cfg.replicates)

    def test_best(self):
        res = run_experiment(McConfig(**BASE))
        k, v = res.best("NEW")
        c = res.curve("NEW")
        assert v == c["mse"].min() and k in c["k"]

    def test_near_uncensored_tracks_hill(self):
        methods = ("HILL", "NEW", "EFG", "W1", "W2")
        cfg = McConfig(gamma1=0.2, p=0.999, n=300, replicates=300, seed=11, k_grid=(10, 30, 60, 100, 150), estimators=methods)
        res = run_experiment(cfg)
        ref = per_replicate(cfg, ("HILL",))["HILL"]
        se = np.std((ref - 0.2) ** 2, axis=0, ddof=1) / math.sqrt(cfg.replicates)
        hill_mse = res.curve("HILL")["mse"]
        for m in methods[1:]:
            assert np.all(np.abs(res.curve(m)["mse"] - hill_mse) <= 3 * se), m


@settings(max_examples=25, deadline=None)
@given(
    gamma1=st.sampled_from([0.2, 0.5, 0.8]),
    p=st.sampled_from([0.55, 0.7, 0.9, 1.0]),
    n=st.integers(12, 60),
    reps=st.integers(1, 8),
    seed=st.integers(0, 2**32),
)
def test_cell_invariants(gamma1, p, n, reps, seed):
    cfg = McConfig(gamma1=gamma1, p=p, n=n, replicates=reps, seed=seed, k_grid=(1, 3, n // 2), estimators=("NEW", "EFG", "W1", "W2"))
    for c in run_experiment(cfg).cells:
        assert c.effective <= reps
        if c.effective:
            assert c.mse >= c.abs_bias**2 - 1e-12 * max(c.mse, 1e-300)


class TestVarianceCheck:
    def test_refuses_few_replicates(self):
        cfg = McConfig(**{**BASE, "replicates": 99})
        with pytest.raises(DomainError, match="at least 100"):
            variance_check(cfg, 10)

    def test_k_must_be_on_grid(self):
        with pytest.raises(DomainError):
            variance_check(McConfig(**BASE), 11)

    def test_unsupported_method(self):
        with pytest.raises(DomainError):
            variance_check(McConfig(**{**BASE, "replicates": 100}), 10, method="W1")

    def test_report_fields(self):
        cfg = McConfig(**{**BASE, "replicates": 150, "n": 400, "k_grid": (20,)})
        rep = variance_check(cfg, 20)
        ref = per_replicate(cfg, ("NEW",))["NEW"][:, 0]
        scaled = math.sqrt(20) * (ref - 0.2)
        assert rep.effective == 150
        assert rep.var_scaled == pytest.approx(np.var(scaled, ddof=1), rel=1e-9)
        assert rep.mean_scaled == pytest.approx(scaled.mean(), rel=1e-9, abs=1e-12)
        assert rep.target_variance == pytest.approx(0.045)
        assert rep.ratio == pytest.approx(rep.var_scaled / 0.045)
        assert rep.ratio_se > 0 and rep.mean_se > 0
        assert "scaled_errors" not in rep.as_dict()

    def test_pareto_means(self):
        # exact Pareto, no censoring: Hill is unbiased; NEW equals (sum a) * Hill exactly
        n, k = 2000, 50
        cfg = McConfig(gamma1=0.5, p=1.0, n=n, replicates=1000, seed=3, k_grid=(k,), model="pareto", estimators=("HILL",))
        hill_rep = variance_check(cfg, k, method="HILL")
        assert abs(hill_rep.mean_scaled) <= 3 * hill_rep.mean_se
        new_rep = variance_check(cfg, k, method="NEW")
        s = order_sample(replicate_sample(cfg, 0))
        offset = math.sqrt(k) * 0.5 * (new_estimator_weights(s, k).a.sum() - 1)
        assert abs(new_rep.mean_scaled - offset) <= 3 * new_rep.mean_se
