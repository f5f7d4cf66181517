import numpy as np
import pytest

from creditbounds.portfolio import DeterministicLgd, homogeneous_portfolio, scenario_from_dict
from creditbounds.profiles import gaussian_profile
from creditbounds.risk import (
    BenchmarkRow,
    BoundRow,
    ResultInvariantError,
    RiskReport,
    _check_chain,
    avar,
    check_cx_dominance,
    risk_report,
    stop_loss_curve,
    var,
)
from creditbounds.simulate import (
    LossSample,
    simulate_comonotone,
    simulate_independent,
    simulate_losses,
)

TWO_POINT = LossSample(np.array([0.0, 0.1]), np.array([0.98, 0.02]))


class TestAvar:
    def test_exact_tail_entirely_in_the_atom(self):
        assert avar(TWO_POINT, 0.99) == pytest.approx(0.1, abs=1e-12)

    def test_exact_fractional_tail(self):
        # 0.1 * 0.02 / 0.05
        assert avar(TWO_POINT, 0.95) == pytest.approx(0.04, abs=1e-12)

    def test_constant_sample(self):
        s = LossSample(np.full(1000, 0.07))
        for conf in (0.5, 0.95, 0.999):
            assert avar(s, conf) == pytest.approx(0.07, abs=1e-15)

    def test_positive_homogeneity_and_translation(self):
        rng = np.random.default_rng(3)
        s = LossSample(rng.exponential(0.01, 5000))
        scaled = LossSample(2.5 * s.losses + 0.3)
        for conf in (0.9, 0.95, 0.99):
            assert avar(scaled, conf) == pytest.approx(2.5 * avar(s, conf) + 0.3, rel=1e-12)

    def test_monotone_in_confidence(self):
        rng = np.random.default_rng(4)
        s = LossSample(rng.exponential(0.01, 20_000))
        values = [avar(s, c) for c in np.linspace(0.5, 0.999, 40)]
        assert np.all(np.diff(values) >= -1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            avar(TWO_POINT, 1.0)
        with pytest.raises(ValueError):
            avar(LossSample(np.array([])), 0.95)


class TestVar:
    def test_uniform_grid(self):
        s = LossSample(np.arange(1, 101) / 100.0)
        assert var(s, 0.95) == pytest.approx(0.95)

    def test_two_point_quantile_below_atom(self):
        assert var(TWO_POINT, 0.95) == 0.0
        assert var(TWO_POINT, 0.99) == pytest.approx(0.1)

    def test_var_never_exceeds_avar(self):
        rng = np.random.default_rng(5)
        s = LossSample(rng.gamma(0.4, 0.05, 30_000))
        for conf in (0.8, 0.9, 0.95, 0.99, 0.999):
            assert var(s, conf) <= avar(s, conf) + 1e-15


class TestStopLoss:
    def test_zero_threshold_is_mean(self):
        rng = np.random.default_rng(6)
        s = LossSample(rng.uniform(0, 1, 10_000))
        assert stop_loss_curve(s, [0.0])[0] == pytest.approx(s.mean(), abs=1e-12)

    def test_beyond_max_is_zero(self):
        s = LossSample(np.array([0.1, 0.2]))
        assert stop_loss_curve(s, [0.2, 0.5]).tolist() == [0.0, 0.0]

    def test_two_point_analytic(self):
        # (0.10 - 0.05) * 0.02
        assert stop_loss_curve(TWO_POINT, [0.05])[0] == pytest.approx(0.001, abs=1e-15)

    def test_decreasing_and_convex(self):
        rng = np.random.default_rng(7)
        s = LossSample(rng.exponential(0.02, 50_000))
        ks = np.linspace(0.0, 0.2, 101)
        curve = stop_loss_curve(s, ks)
        assert np.all(np.diff(curve) <= 1e-15)
        second = curve[2:] - 2 * curve[1:-1] + curve[:-2]
        assert np.all(second >= -1e-12)

    def test_requires_sorted_thresholds(self):
        with pytest.raises(ValueError):
            stop_loss_curve(TWO_POINT, [0.2, 0.1])


PORT100 = homogeneous_portfolio(100, 0.02, DeterministicLgd(0.1))


class TestCxDominance:
    def test_low_correlation_below_high_correlation(self):
        a = simulate_losses([gaussian_profile(0.12, 0.02)] * 100, PORT100, 100_000, seed=51)
        b = simulate_losses([gaussian_profile(0.24, 0.02)] * 100, PORT100, 100_000, seed=52)
        assert check_cx_dominance(a, b) == "dominates"

    def test_independent_below_comonotone(self):
        a = simulate_independent(PORT100, 100_000, seed=53)
        b = simulate_comonotone(PORT100, 100_000, seed=54)
        assert check_cx_dominance(a, b) == "dominates"

    def test_reflexive_same_seed(self):
        a = simulate_independent(PORT100, 50_000, seed=55)
        b = simulate_independent(PORT100, 50_000, seed=55)
        assert check_cx_dominance(a, b) == "dominates"

    def test_reversed_pair_violates(self):
        a = simulate_comonotone(PORT100, 100_000, seed=56)
        b = simulate_independent(PORT100, 100_000, seed=57)
        assert check_cx_dominance(a, b) == "violates"

    def test_mismatched_means_without_crossing_is_indistinguishable(self):
        rng = np.random.default_rng(58)
        a = LossSample(rng.uniform(0.0, 0.01, 50_000))
        b = LossSample(rng.uniform(0.0, 0.01, 50_000) + 0.005)
        assert check_cx_dominance(a, b) == "indistinguishable"

    def test_every_factor_model_below_comonotone(self):
        from creditbounds.profiles import clayton_profile, survival_clayton_profile

        comon = simulate_comonotone(PORT100, 100_000, seed=60)
        for i, profile in enumerate(
            (gaussian_profile(0.24, 0.02), clayton_profile(0.97, 0.02),
             survival_clayton_profile(0.97, 0.02))
        ):
            sample = simulate_losses([profile] * 100, PORT100, 100_000, seed=61 + i)
            assert check_cx_dominance(sample, comon) == "dominates"


def _tiny_scenario(models=("gaussian",), samples=40_000):
    return scenario_from_dict(
        {
            "label": "tiny",
            "portfolio": {
                "kind": "homogeneous",
                "n": 100,
                "pd": 0.02,
                "lgd": {"kind": "deterministic", "value": 0.1},
                "corr_interval": [0.12, 0.24],
            },
            "models": list(models),
            "alphas": [0.95, 0.99],
            "mc": {"samples": samples, "seed": 99, "workers": 2},
        }
    )


class TestRiskReport:
    def test_chain_and_shape(self):
        report = risk_report(_tiny_scenario(("gaussian", "independent")))
        assert len(report.rows) == 4
        assert len(report.benchmarks) == 2
        for row in report.rows:
            bench = report.benchmark(row.alpha)
            assert bench.avar_indep <= row.avar_lower + 3 * (row.se_lower + bench.se_indep) + 1e-12
            assert row.avar_lower <= row.avar_upper + 3 * (row.se_lower + row.se_upper) + 1e-12
            assert row.avar_upper <= bench.avar_comon + 3 * (row.se_upper + bench.se_comon) + 1e-12

    def test_deterministic_output(self):
        r1 = risk_report(_tiny_scenario())
        r2 = risk_report(_tiny_scenario())
        assert r1.to_csv() == r2.to_csv()

    def test_serialization_layout(self):
        report = risk_report(_tiny_scenario())
        csv_text = report.to_csv()
        assert csv_text.splitlines()[0].startswith("scenario,model,alpha,avar_lower")
        assert len(csv_text.splitlines()) == 3
        table = report.to_text()
        assert "Gaussian" in table and "indep" in table and "comon" in table

    def test_chain_violation_raises(self):
        bad = RiskReport(
            scenario_label="broken",
            models=("gaussian",),
            alphas=(0.95,),
            rows=(BoundRow("gaussian", 0.95, 0.05, 0.01, 0.0, 0.0),),
            benchmarks=(BenchmarkRow(0.95, 0.001, 0.1, 0.0, 0.0),),
            samples=1,
            seed=1,
        )
        with pytest.raises(ResultInvariantError, match="exceeds"):
            _check_chain(bad)

    def test_gauss_clayton_lower_tracks_gaussian_point(self):
        report = risk_report(_tiny_scenario(("gauss_clayton",), samples=100_000))
        row = report.row("gauss_clayton", 0.95)
        assert row.avar_lower < row.avar_upper
