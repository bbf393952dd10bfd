import numpy as np
import pytest
from scipy import stats

from bootlasso.errors import DegenerateTruth
from bootlasso.lasso import lambda_max
from bootlasso.simulation import (
    SimulationConfig,
    TruthRule,
    build_truth,
    estimate_sigma,
    method_label,
    parse_method,
    run_simulation_study,
    simulate_response,
)
from bootlasso.weights import WeightScheme
from conftest import SIM_SEED


class TestTruth:
    def test_support_is_sparse(self, truth, diabetes):
        assert 10 <= len(truth.support) <= 25
        assert truth.support == tuple(np.flatnonzero(truth.beta))
        assert truth.sigma > 0

    def test_reproducible(self, truth, diabetes):
        again = build_truth(diabetes, TruthRule("cv", 10, 10, "min"), SIM_SEED)
        np.testing.assert_array_equal(again.beta, truth.beta)
        assert again.lam == truth.lam

    def test_lambda_max_truth_is_rejected(self, diabetes):
        with pytest.raises(DegenerateTruth):
            build_truth(diabetes, TruthRule("lambda", lam=lambda_max(diabetes)))

    def test_sigma_formula(self, truth, diabetes):
        r = diabetes.y - diabetes.X @ truth.beta
        expected = np.sqrt(r @ r / (diabetes.n - len(truth.support)))
        assert estimate_sigma(diabetes, truth.beta) == pytest.approx(expected, rel=1e-12)


class TestSimulateResponse:
    def test_noiseless_limit(self, diabetes, truth):
        y = simulate_response(diabetes, truth.beta, 1e-12, np.random.default_rng(0))
        np.testing.assert_allclose(y, diabetes.X @ truth.beta, atol=1e-8)

    def test_noise_moments(self, diabetes, truth):
        mean_fx = diabetes.X @ truth.beta
        ratios, means = [], []
        for seed in range(200):
            eps = simulate_response(diabetes, truth.beta, truth.sigma,
                                    np.random.default_rng(seed)) - mean_fx
            ratios.append(eps.var(ddof=1) / truth.sigma**2)
            means.append(abs(eps.mean()) < 3 * truth.sigma / np.sqrt(diabetes.n))
        ratios = np.array(ratios)
        # a single draw lands within 15% of sigma^2 about 97% of the time at n = 442
        assert np.mean(np.abs(ratios - 1) < 0.15) >= 0.95
        assert abs(ratios.mean() - 1) < 0.02
        assert np.mean(means) >= 0.98

    def test_sigma_must_be_positive(self, diabetes, truth):
        with pytest.raises(ValueError):
            simulate_response(diabetes, truth.beta, 0.0, np.random.default_rng(0))


class TestMethods:
    @pytest.mark.parametrize("text, expected", [
        ("cv:3", ("cv", 3)), ("cv:loo", ("cv", None)), ("cv:n", ("cv", None)),
        ("ebic:0.5", ("ebic", 0.5)), ("paired", ("weights", WeightScheme.paired())),
    ])
    def test_parse(self, text, expected):
        assert parse_method(text) == expected

    @pytest.mark.parametrize("text", ["cv:1", "cv:x", "ebic:2", "nonsense"])
    def test_parse_rejects(self, text):
        with pytest.raises(ValueError):
            parse_method(text)

    def test_loo_label_uses_n(self):
        assert method_label("cv:loo", 442) == "cv:442"
        assert method_label("beta:0.4,3.6", 442) == "beta:0.4,3.6"


def small_config(diabetes, **kw):
    base = dict(data=diabetes, seed=3, n_replications=2,
                truth_rule=TruthRule("cv", 5, 2, "min"),
                methods=("cv:3", "mofn:0.5", "beta:2,2", "ebic:1"), b=6, n_lambda=40)
    base.update(kw)
    return SimulationConfig(**base)


class TestStudy:
    def test_deterministic_and_thread_independent(self, diabetes):
        a = run_simulation_study(small_config(diabetes), threads=1)
        b = run_simulation_study(small_config(diabetes), threads=3)
        assert a.cells == b.cells
        np.testing.assert_array_equal(a.truth.beta, b.truth.beta)

    def test_cells_lie_on_grid(self, diabetes):
        res = run_simulation_study(small_config(diabetes))
        rules = {(c.method, c.rule) for c in res.cells}
        assert ("cv:3", "one_se") in rules and ("ebic:1", "min") in rules
        for c in res.cells:
            assert res.mcc_curves[c.replication].lambdas[c.lambda_index] == c.lam
            assert -1 <= c.mcc <= 1

    def test_cell_errors_are_recorded(self, diabetes):
        res = run_simulation_study(small_config(diabetes, methods=("mofn:0.002", "cv:3")))
        bad = [c for c in res.cells if c.error]
        assert len(bad) == 2 and all("AllReplicatesDegenerate" in c.error for c in bad)
        assert len(res.select("cv:3")) == 2
        row = [r for r in res.summary() if r["method"] == "mofn:0.002"][0]
        assert row["n_ok"] == 0 and row["n_failed"] == 2


@pytest.mark.slow
class TestStudyInvariants:
    @pytest.fixture(scope="class")
    @staticmethod
    def study(diabetes):
        cfg = SimulationConfig(data=diabetes, seed=SIM_SEED, n_replications=20,
                               methods=("cv:loo", "cv:10", "cv:5", "cv:3", "beta:2,2", "beta:20,20"),
                               b=100)
        return run_simulation_study(cfg)

    def test_lambda_spread_grows_as_k_falls(self, study, diabetes):
        # dispersion trend test: absolute deviations of the selected lambdas
        # from each method's median, ranked against the fold order
        # LOO < 10 < 5 < 3; a significantly decreasing trend rejects
        order, dev = [], []
        for pos, method in enumerate([f"cv:{diabetes.n}", "cv:10", "cv:5", "cv:3"]):
            lam = study.lambdas(method)
            assert lam.size >= 20
            order += [pos] * lam.size
            dev += list(np.abs(lam - np.median(lam)))
        result = stats.kendalltau(order, dev, alternative="less")
        assert result.pvalue > 0.1

    def test_beta_shapes_matched_on_rho(self, study):
        a = np.median(study.lambdas("beta:2,2"))
        b = np.median(study.lambdas("beta:20,20"))
        assert abs(a - b) / max(a, b) < 0.25
