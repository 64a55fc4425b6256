import numpy as np
import pytest
from scipy import stats

from qascreen.simulate import (
    DesignSpec,
    example_info,
    g1,
    g2,
    g3,
    g4,
    gen_example1,
    gen_example2,
    gen_example3,
    gen_example4,
    make_example,
    sample_ar1_gaussian,
    write_instance_csv,
)


class TestAR1:
    def test_independent_columns_when_rho_zero(self):
        X = sample_ar1_gaussian(DesignSpec(n=10000, p=5, rho=0.0, seed=1))
        corr = np.corrcoef(X[:, 0], X[:, 1])[0, 1]
        assert abs(corr) < 0.03

    def test_lag_two_correlation(self):
        X = sample_ar1_gaussian(DesignSpec(n=10000, p=5, rho=0.8, seed=2))
        corr = np.corrcoef(X[:, 0], X[:, 2])[0, 1]
        assert corr == pytest.approx(0.64, abs=0.03)

    def test_bit_identical_for_fixed_seed(self):
        spec = DesignSpec(n=50, p=20, rho=0.5, seed=77)
        assert np.array_equal(sample_ar1_gaussian(spec), sample_ar1_gaussian(spec))

    def test_large_sample_moments(self):
        X = sample_ar1_gaussian(DesignSpec(n=100000, p=6, rho=0.8, seed=3))
        assert np.max(np.abs(X.mean(axis=0))) < 0.02
        for k in (1, 2, 3):
            corr = np.corrcoef(X[:, 0], X[:, k])[0, 1]
            assert corr == pytest.approx(0.8**k, abs=0.02)

    def test_validation(self):
        with pytest.raises(ValueError):
            DesignSpec(n=0, p=3, rho=0.5)
        with pytest.raises(ValueError):
            DesignSpec(n=3, p=3, rho=1.0)


class TestComponentFunctions:
    def test_printed_values(self):
        assert g2(0.5) == 0.0
        assert g1(1.0) == 1.0
        assert g3(0.25) == pytest.approx(1.0)
        assert g4(0.0) == pytest.approx(0.6)


class TestExample1:
    def test_active_sets_same_at_all_quantiles(self):
        inst = gen_example1("b", n=60, p=10, seed=4)
        assert inst.active_set(0.5) == {0, 1, 2, 3}
        assert inst.active_set(0.75) == {0, 1, 2, 3}
        assert not inst.censored

    def test_response_formula(self):
        inst = gen_example1("a", n=200, p=8, seed=5)
        X = inst.X
        signal = 5 * g1(X[:, 0]) + 3 * g2(X[:, 1]) + 4 * g3(X[:, 2]) + 6 * g4(X[:, 3])
        resid = inst.y - signal
        # noise is sqrt(1.74) * standard normal
        assert abs(np.var(resid) - 1.74) < 0.6
        assert stats.shapiro(resid / np.sqrt(1.74))[1] > 0.01

    def test_cauchy_case_has_heavy_tails(self):
        inst = gen_example1("c", n=4000, p=5, seed=6)
        X = inst.X
        signal = 5 * g1(X[:, 0]) + 3 * g2(X[:, 1]) + 4 * g3(X[:, 2]) + 6 * g4(X[:, 3])
        resid = (inst.y - signal) / np.sqrt(1.74)
        assert np.mean(np.abs(resid) > 10) > 0.02  # Cauchy: P(|e|>10) ~ 0.063

    def test_seeded_determinism(self):
        a = gen_example1("b", n=30, p=6, seed=9)
        b = gen_example1("b", n=30, p=6, seed=9)
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)

    def test_case_validation(self):
        with pytest.raises(ValueError):
            gen_example1("d", n=30, p=6)


class TestExample2:
    def test_active_set_sizes(self):
        inst = gen_example2(n=50, p=30, seed=7)
        assert len(inst.active_set(0.5)) == 5
        assert len(inst.active_set(0.75)) == 8
        assert inst.active_set(0.75) - inst.active_set(0.5) == {19, 20, 21}

    def test_conditional_median_is_linear_part(self):
        # with epsilon symmetric about 0 the median of y - linear part is ~0
        inst = gen_example2(n=20000, p=25, seed=8)
        X = inst.X
        linear = 2.0 * (X[:, 0] + 0.8 * X[:, 1] + 0.6 * X[:, 2] + 0.4 * X[:, 3] + 0.2 * X[:, 4])
        assert abs(np.median(inst.y - linear)) < 0.05

    def test_heteroscedasticity_witness(self):
        inst = gen_example2(n=4000, p=25, seed=9)
        X = inst.X
        linear = 2.0 * (X[:, 0] + 0.8 * X[:, 1] + 0.6 * X[:, 2] + 0.4 * X[:, 3] + 0.2 * X[:, 4])
        spread = np.abs(inst.y - linear)
        driver = X[:, 19] + X[:, 20] + X[:, 21]
        rho, pval = stats.spearmanr(spread, driver)
        assert rho > 0
        assert pval < 0.01


class TestExample3:
    def test_active_set_sizes(self):
        inst = gen_example3("a", n=40, p=40, seed=10)
        assert inst.active_set(0.5) == {0, 1}
        assert len(inst.active_set(0.75)) == 15
        assert inst.active_set(0.75) == {0, 1} | set(range(17, 30))

    def test_case_b_shifts_location_only(self):
        a = gen_example3("a", n=3000, p=35, seed=11)
        b = gen_example3("b", n=3000, p=35, seed=11)
        assert np.array_equal(a.X, b.X)
        X = a.X
        loc_a = 2.0 * (X[:, 0] ** 2 + X[:, 1] ** 2)
        loc_b = 2.0 * ((X[:, 0] + 1.0) ** 2 + (X[:, 1] + 2.0) ** 2)
        # same noise realization: centered responses agree to relative rounding
        assert np.allclose(b.y - loc_b, a.y - loc_a, rtol=1e-9, atol=1e-9)

    def test_noise_scale_factor(self):
        inst = gen_example3("a", n=5000, p=35, seed=12)
        X = inst.X
        loc = 2.0 * (X[:, 0] ** 2 + X[:, 1] ** 2)
        scale = 0.1 * np.exp(X[:, 0] + X[:, 1] + X[:, 17:30].sum(axis=1))
        standardized = (inst.y - loc) / scale
        assert abs(np.median(standardized)) < 0.05
        assert stats.shapiro(standardized[:500])[1] > 0.01


class TestExample4:
    def test_censoring_rate_about_45_percent(self):
        inst = gen_example4(n=10000, p=5, seed=123)
        rate = 1.0 - inst.status.mean()
        assert 0.40 <= rate <= 0.50

    def test_delta_is_indicator_of_y_below_c(self):
        inst = gen_example4(n=500, p=5, seed=13)
        # reconstruct: uncensored rows observe the latent response; all rows
        # satisfy time = min(y, c), so status=0 rows were cut at c
        assert set(np.unique(inst.status)) <= {0, 1}
        assert inst.censored
        assert inst.active_set(0.25) == {0, 1, 2, 3}

    def test_mixture_components(self):
        # with the (mean, variance) reading the third component sits near 55
        inst = gen_example4(n=20000, p=5, seed=14)
        censored_times = inst.y[inst.status == 0]
        # censored observations cut by the C ~ N(-5, 4) component: sd ~2
        low = censored_times[censored_times < 0]
        assert abs(low.mean() - (-5.0)) < 0.5
        assert abs(low.std() - 2.0) < 0.3

    def test_seeded_determinism(self):
        a = gen_example4(n=40, p=6, seed=15)
        b = gen_example4(n=40, p=6, seed=15)
        assert np.array_equal(a.y, b.y) and np.array_equal(a.status, b.status)


class TestDispatch:
    def test_make_example_ids(self):
        for ex in ("1a", "1b", "1c", "2", "3a", "3b", "4"):
            inst = make_example(ex, seed=1, n=40, p=35)
            assert inst.X.shape == (40, 35)
            assert inst.example_id == ex

    def test_unknown_example(self):
        with pytest.raises(ValueError, match="unknown example"):
            make_example("9", seed=1)

    def test_example_info_matches_instances(self):
        for ex in ("1b", "2", "3a", "4"):
            med, other, censored = example_info(ex)
            inst = make_example(ex, seed=2, n=40, p=35)
            assert inst.active_set(0.5) == med
            assert inst.active_set(0.3) == other
            assert inst.censored == censored

    def test_stream_separation(self):
        a = make_example("1b", seed=(5, 0), n=30, p=6)
        b = make_example("1b", seed=(5, 1), n=30, p=6)
        assert not np.array_equal(a.X, b.X)


class TestCSVEmission:
    def test_round_trip_values(self, tmp_path):
        inst = make_example("1b", seed=3, n=25, p=4)
        path = tmp_path / "inst.csv"
        write_instance_csv(inst, path)
        from qascreen.cli import read_table

        names, data = read_table(str(path))
        assert names == ["x1", "x2", "x3", "x4", "y"]
        assert np.array_equal(data[:, :4], inst.X)
        assert np.array_equal(data[:, 4], inst.y)

    def test_censored_round_trip(self, tmp_path):
        inst = make_example("4", seed=4, n=25, p=4)
        path = tmp_path / "inst.csv"
        write_instance_csv(inst, path)
        from qascreen.cli import read_table

        names, data = read_table(str(path))
        assert names[-1] == "status"
        assert np.array_equal(data[:, -1].astype(int), inst.status)
