import json
import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import spearmanr

from sievevar.dgp_lab import (
    KINDS,
    DgpSpec,
    IdentityError,
    LinearModel,
    MeanModel,
    Sann,
    TrueModel,
    chaos_map,
    decompose_mse,
    generate,
    high_dim_function,
    irregular_iid_fn,
    layout,
    model1_g,
    parse_cell,
    pointwise_metrics,
    run_mc,
    sieve_sweep,
    table2,
    table3,
)
from sievevar.dgp_lab.estimators import EstimatorOutput
from sievevar.dgp_lab.presets import FIT_TRAIN


class TestGoldenValues:
    def test_chaos_from_zero(self):
        assert chaos_map(0.0) == pytest.approx(22 / math.pi * math.sin(1 / 3), rel=1e-15)
        assert chaos_map(0.0) == pytest.approx(2.2913, abs=1e-4)

    def test_model1_g_at_one(self):
        assert model1_g(1.0) == pytest.approx(0.3 * math.exp(-16) + 0.7, rel=1e-15)
        assert model1_g(1.0) == pytest.approx(0.7000, abs=1e-4)

    def test_high_dim_f1(self):
        assert high_dim_function(1)(0.0) == 0.0

    def test_high_dim_beyond_table_is_linear(self):
        x = np.linspace(0, 3, 5)
        np.testing.assert_array_equal(high_dim_function(12)(x), x)
        with pytest.raises(ValueError):
            high_dim_function(0)

    def test_irregular_branch(self):
        x = np.array([0.5, 2.0])
        base = 0.4 * (x - 10) ** 3 + 0.1 * (x / 7) ** 7 + 600 * np.sin(2 * x)
        np.testing.assert_allclose(irregular_iid_fn(x), base + [0.0, -800 * np.sin(4.0) - 200])


class TestGenerate:
    @pytest.mark.parametrize("kind", KINDS)
    def test_bit_identical(self, kind):
        a = generate(DgpSpec(kind, n=300, seed=3))
        b = generate(DgpSpec(kind, n=300, seed=3))
        pd.testing.assert_frame_equal(a, b, check_exact=True)

    @pytest.mark.parametrize("kind", ["irregular_iid", "model1", "model2", "high_dim"])
    def test_replications_share_design(self, kind):
        spec = DgpSpec(kind, n=200, seed=1)
        a, b = generate(spec, 0), generate(spec, 1)
        regs = list(layout(spec).regressors)
        pd.testing.assert_frame_equal(a[regs], b[regs], check_exact=True)
        assert not np.array_equal(a["y"], b["y"])
        np.testing.assert_array_equal(a["truth"], b["truth"])

    @pytest.mark.parametrize("kind", KINDS)
    def test_finite_at_large_n(self, kind):
        frame = generate(DgpSpec(kind, n=100_000))
        assert len(frame) == 100_000
        assert np.all(np.isfinite(frame.to_numpy()))

    def test_chaos_bounded(self):
        y = generate(DgpSpec("chaos", n=20_000))["y"].to_numpy()
        assert np.max(np.abs(y)) <= (22 / math.pi) / 0.7 + 1e-9

    def test_chaos_is_noiseless_recursion(self):
        f = generate(DgpSpec("chaos", n=50))
        np.testing.assert_array_equal(f["y"].to_numpy()[:-1], f["y_lag1"].to_numpy()[1:])
        np.testing.assert_array_equal(f["y"], chaos_map(f["y_lag1"].to_numpy()))

    def test_model2_lags_line_up(self):
        f = generate(DgpSpec("model2", n=100))
        np.testing.assert_array_equal(f["v_lag1"].to_numpy()[:-1], f["v_lag2"].to_numpy()[1:])
        np.testing.assert_array_equal(f["x_lag1"].to_numpy()[:-1], f["x_lag2"].to_numpy()[1:])

    def test_high_dim_supports(self):
        f = generate(DgpSpec("high_dim", n=2000, relevant=5, irrelevant=3))
        rel = f[[f"x{i}" for i in range(1, 6)]].to_numpy()
        irr = f[[f"noise{i}" for i in range(1, 4)]].to_numpy()
        assert rel.min() >= 0 and rel.max() <= 3
        assert irr.min() >= -1 and irr.max() <= 1
        assert np.std(f["y"] - f["truth"]) == pytest.approx(9.0, rel=0.05)

    def test_noise_override(self):
        f = generate(DgpSpec("high_dim", n=4000, noise_sd=7.0))
        assert np.std(f["y"] - f["truth"]) == pytest.approx(7.0, rel=0.05)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            DgpSpec("spiral")
        with pytest.raises(ValueError):
            DgpSpec("high_dim", relevant=0)
        with pytest.raises(ValueError):
            DgpSpec("chaos", n=1)
        with pytest.raises(ValueError):
            DgpSpec("linear", noise_sd=-1)

    def test_spec_dict_round_trip(self):
        spec = DgpSpec("high_dim", relevant=5, irrelevant=10, noise_sd=7.0, seed=4)
        assert DgpSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


class TestPointwiseMetrics:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**6), st.floats(1e-3, 1e4))
    def test_decomposition_identity(self, seed, scale):
        rng = np.random.default_rng(seed)
        truth = scale * rng.standard_normal(15)
        preds = truth + scale * (0.3 * rng.standard_normal((7, 15)) + rng.standard_normal(15))
        m = pointwise_metrics(preds, truth)
        gap = np.abs(m.mse - m.bias2 - m.var_e)
        assert np.all(gap <= 1e-10 * np.maximum(1.0, m.mse + truth**2 + np.mean(preds**2, axis=0)))
        assert np.all(m[["bias2", "var_e", "mse"]].to_numpy() >= 0)

    def test_identical_replications(self):
        truth = np.array([0.1, 1e3, -7.0])
        m = pointwise_metrics(np.tile(truth, (5, 1)), truth)
        assert np.all(m.bias2 == 0) and np.all(m.var_e == 0) and np.all(m.mse == 0)

    def test_identity_error_type(self):
        assert issubclass(IdentityError, AssertionError)


def _grid_curves(mc, name):
    return mc.curves[mc.curves.estimator == name]


class TestRunMc:
    def test_truth_has_no_bias_or_variance(self):
        mc = run_mc(DgpSpec("irregular_iid", n=200), [TrueModel(), MeanModel()], B=3)
        c = _grid_curves(mc, "true")
        assert mc.eval_set == "grid" and len(c) == 201
        assert np.all(c.bias2 == 0) and np.all(c.var_e == 0)

    def test_mean_predictor_integrated_bias(self):
        spec = DgpSpec("irregular_iid", n=400, seed=2)
        mc = run_mc(spec, [MeanModel()], B=20)
        # the design is fixed, so the predictor averages to the mean truth on the training rows
        centre = generate(spec, 0)["truth"].to_numpy()[:320].mean()
        oracle = integrate.quad(lambda x: (irregular_iid_fn(x) - centre) ** 2, -10, 10,
                                points=[1.0], limit=400)[0] / 20.0
        got = mc.integrated.set_index("estimator").loc["mean", "int_bias2"]
        assert got == pytest.approx(oracle, rel=0.02)

    def test_curves_satisfy_identity(self):
        mc = run_mc(DgpSpec("model1", n=400), ["linear", "kernel_plm"], B=4, split=100)
        c = mc.curves
        assert np.all(np.abs(c.mse - c.bias2 - c.var_e) <= 1e-10 * np.maximum(1, c.mse))

    def test_variance_scales_with_noise(self):
        sigmas = np.array([0.25, 0.5, 1.0, 2.0, 4.0])
        var = []
        for s in sigmas:
            mc = run_mc(DgpSpec("linear", n=200, noise_sd=s), [LinearModel()], B=10)
            var.append(mc.integrated.int_var_e.iloc[0])
        slope = np.polyfit(np.log(sigmas**2), np.log(var), 1)[0]
        assert abs(slope - 1.0) <= 0.2
        assert mc.eval_set == "test"

    def test_deterministic(self):
        spec = DgpSpec("model2", n=300, seed=5)
        a = run_mc(spec, ["linear", "ann"], B=2, split=60)
        b = run_mc(spec, ["linear", "ann"], B=2, split=60)
        pd.testing.assert_frame_equal(a.replications, b.replications, check_exact=True)
        pd.testing.assert_frame_equal(a.curves, b.curves, check_exact=True)

    def test_parallel_matches_serial(self):
        spec = DgpSpec("linear", n=120, seed=6)
        a = run_mc(spec, ["linear", "mean"], B=3)
        b = run_mc(spec, ["linear", "mean"], B=3, workers=2)
        pd.testing.assert_frame_equal(a.replications, b.replications, check_exact=True)
        pd.testing.assert_frame_equal(a.curves, b.curves, check_exact=True)

    def test_failures_recorded_and_excluded(self):
        class Flaky:
            name = "flaky"

            def __call__(self, train, evals, lay, seed):
                if train["y"].iloc[0] > train["truth"].iloc[0]:
                    raise RuntimeError("boom")
                return EstimatorOutput([np.zeros(len(f)) for f in evals])

            def config(self):
                return {"type": "flaky"}

        mc = run_mc(DgpSpec("linear", n=100), [LinearModel(), Flaky()], B=8)
        reps = mc.replications
        failed = reps[(reps.estimator == "flaky") & (reps.status == "failed")]
        assert 0 < len(failed) < 8
        assert failed.error.str.contains("boom").all()
        s = mc.summary().set_index("estimator")
        assert s.loc["flaky", "failures"] == len(failed)
        assert s.loc["flaky", "replications"] == 8 - len(failed)
        assert s.loc["linear", "failures"] == 0

    def test_sann_without_linear_part_fails_cleanly(self):
        mc = run_mc(DgpSpec("irregular_iid", n=100), [Sann(), MeanModel()], B=2)
        assert (mc.replications.set_index("estimator").loc["sann", "status"] == "failed").all()

    def test_coefficients_recorded(self):
        mc = run_mc(DgpSpec("linear", n=300), [LinearModel()], B=5)
        cs = mc.coefficient_summary().set_index("name")
        assert cs.loc["x1", "coef_mean"] == pytest.approx(1.0, abs=0.1)
        assert cs.loc["x2", "coef_mean"] == pytest.approx(-0.5, abs=0.1)

    def test_exports(self, tmp_path):
        mc = run_mc(DgpSpec("linear", n=100), ["linear", "mean"], B=2)
        paths = mc.write(tmp_path)
        names = sorted(p.name for p in paths)
        assert names == ["coefficients.csv", "curves.csv", "replications.csv", "summary.csv",
                         "summary.json"]
        rep = pd.read_csv(tmp_path / "replications.csv")
        assert list(rep.columns) == ["replication", "estimator", "status", "rmspe", "mse_truth",
                                     "error"]
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["config"]["B"] == 2

    def test_validation(self):
        with pytest.raises(ValueError):
            run_mc(DgpSpec("linear"), ["linear"], B=1)
        with pytest.raises(ValueError):
            run_mc(DgpSpec("linear"), ["linear", "linear"], B=2)
        with pytest.raises(ValueError):
            run_mc(DgpSpec("linear", n=50), ["linear"], B=2, split=60)
        with pytest.raises(ValueError):
            run_mc(DgpSpec("linear"), ["svm"], B=2)


class TestSieveStudies:
    def test_bias_falls_with_sieve_order(self):
        table, mc = decompose_mse(DgpSpec("irregular_iid"), [2, 5, 10, 25, 50, 100], B=4,
                                  train_config=FIT_TRAIN)
        assert list(table.order) == [2, 5, 10, 25, 50, 100]
        b = table.int_bias2.to_numpy()
        assert spearmanr(table.order, b)[0] <= 0
        assert np.sum(np.diff(b) > 0) <= 1
        assert np.all(table[["int_bias2", "int_var_e", "int_mse"]].to_numpy() >= 0)

    def test_decompose_needs_replications(self):
        with pytest.raises(ValueError):
            decompose_mse(DgpSpec("irregular_iid"), [2], B=1)

    def test_sieve_sweep_shape(self):
        table = sieve_sweep(DgpSpec("chaos", n=100), [2, 10])
        assert list(table.columns) == ["hidden_units", "mse", "epochs", "converged"]
        assert np.all(table.mse >= 0)


class TestPresets:
    def test_parse_cell(self):
        assert parse_cell("15x10") == (15, 10)
        with pytest.raises(ValueError):
            parse_cell("15-10")

    def test_table_presets(self):
        s = table2("5x20", B=3)
        assert (s.spec.relevant, s.spec.irrelevant, s.B) == (5, 20, 3)
        assert [e.name for e in table3("model1").estimators] == ["true", "sann", "kernel_plm",
                                                                 "linear", "ann"]
        assert "sann_all" in [e.name for e in table3("model2a").estimators]
        with pytest.raises(ValueError):
            table3("model3")
