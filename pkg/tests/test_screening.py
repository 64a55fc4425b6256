import numpy as np
import pytest

from qascreen.quantreg import sample_quantile
from qascreen.screening import (
    QuantileScreener,
    ScreeningConfig,
    marginal_utility,
    rank_and_select,
    screen,
    screen_many,
)


def toy_data(seed=0, n=120, p=12):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = 4.0 * X[:, 0] + (2.0 * X[:, 1] - 1.0) ** 2 + rng.normal(size=n)
    return X, y


def censor(y, rng, level=8.0):
    C = rng.normal(level, 4.0, size=y.shape[0])
    return np.minimum(y, C), (y <= C).astype(int)


class TestRankAndSelect:
    def test_tie_broken_by_index(self):
        ranking, selected = rank_and_select(np.array([0.1, 0.5, 0.5]), keep=2)
        assert ranking.tolist() == [1, 2, 0]
        assert selected.tolist() == [1, 2]

    def test_threshold_rule(self):
        _, selected = rank_and_select(np.array([0.1, 0.5, 0.5]), threshold=0.3)
        assert selected.tolist() == [1, 2]

    def test_requires_keep_or_threshold(self):
        with pytest.raises(ValueError):
            rank_and_select(np.array([1.0, 2.0]))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            rank_and_select(np.array([1.0, np.nan]), keep=1)


class TestConfig:
    def test_auto_keep_rule(self):
        cfg = ScreeningConfig()
        assert cfg.resolve_keep(400, 1000) == 66
        assert cfg.resolve_keep(160, 7399) == 31
        assert cfg.resolve_keep(400, 50) == 50  # capped at p

    def test_validation(self):
        with pytest.raises(ValueError):
            ScreeningConfig(alpha=1.2)
        with pytest.raises(ValueError):
            ScreeningConfig(method="lasso")
        with pytest.raises(ValueError):
            ScreeningConfig(keep=0)
        with pytest.raises(ValueError):
            ScreeningConfig(g_min=0.0)


class TestMarginalUtility:
    def test_constant_column_is_zero(self):
        rng = np.random.default_rng(1)
        assert marginal_utility(np.full(50, 0.5), rng.normal(size=50)) == 0.0

    def test_noiseless_linear_matches_closed_form(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(size=400)
        y = 10.0 * x
        util = marginal_utility(x, y, config=ScreeningConfig(alpha=0.5, num_basis=3))
        target = float(np.mean((10.0 * x - np.median(y)) ** 2))
        assert util == pytest.approx(target, rel=1e-2)

    def test_independent_feature_below_permutation_null(self):
        rng = np.random.default_rng(3)
        n = 400
        y = np.sort(rng.normal(size=n) * 3.0)
        x = rng.permutation(np.linspace(0.0, 1.0, n))
        cfg = ScreeningConfig(alpha=0.5, num_basis=3)
        util = marginal_utility(x, y, config=cfg)
        null = np.array(
            [marginal_utility(rng.permutation(x), y, config=cfg) for _ in range(200)]
        )
        assert util < np.quantile(null, 0.95)

    def test_requires_unit_interval(self):
        with pytest.raises(ValueError, match="rescaled"):
            marginal_utility(np.array([0.0, 2.0]), np.array([1.0, 2.0]))


class TestScreen:
    def test_signal_features_rank_first(self):
        X, y = toy_data(n=120, p=50)
        res = screen(X, y, ScreeningConfig(alpha=0.5))
        assert set(res.ranking[:2].tolist()) == {0, 1}
        assert res.keep == 25  # floor(120 / ln 120)
        assert len(res.selected) == 25

    def test_keep_capped_at_p(self):
        X, y = toy_data()
        res = screen(X, y, ScreeningConfig(alpha=0.5))
        assert res.keep == 12
        assert len(res.selected) == 12

    def test_selected_is_top_keep(self):
        X, y = toy_data(n=200, p=60)
        res = screen(X, y, ScreeningConfig(alpha=0.5))
        assert res.keep == 37
        assert len(res.selected) == 37
        assert set(res.selected.tolist()) == set(res.ranking[:37].tolist())

    def test_p_equals_one(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(40, 1))
        y = X[:, 0] + rng.normal(size=40)
        res = screen(X, y, ScreeningConfig())
        assert res.ranking.tolist() == [0]
        assert res.selected.tolist() == [0]

    def test_affine_response_invariance(self):
        X, y = toy_data(seed=5)
        cfg = ScreeningConfig(alpha=0.25)
        base = screen(X, y, cfg)
        moved = screen(X, 2.5 * y - 7.0, cfg)
        assert np.array_equal(base.ranking, moved.ranking)
        assert np.array_equal(base.selected, moved.selected)
        rel = np.abs(moved.utilities - 2.5**2 * base.utilities) / (
            1.0 + 2.5**2 * base.utilities
        )
        assert rel.max() < 1e-8

    def test_column_permutation_equivariance(self):
        X, y = toy_data(seed=6)
        perm = np.random.default_rng(7).permutation(X.shape[1])
        base = screen(X, y, ScreeningConfig())
        permuted = screen(X[:, perm], y, ScreeningConfig())
        assert np.allclose(permuted.utilities, base.utilities[perm])

    def test_deterministic(self):
        X, y = toy_data(seed=8)
        a = screen(X, y, ScreeningConfig(alpha=0.75))
        b = screen(X, y, ScreeningConfig(alpha=0.75))
        assert np.array_equal(a.utilities, b.utilities)
        assert np.array_equal(a.ranking, b.ranking)

    def test_degenerate_column_flagged_zero(self):
        X, y = toy_data(seed=9)
        X[:, 4] = 3.14
        res = screen(X, y, ScreeningConfig())
        assert res.utilities[4] == 0.0
        assert res.flags[4] == "degenerate"
        assert res.flags[0] == "ok"

    def test_threshold_mode(self):
        X, y = toy_data(seed=10)
        res = screen(X, y, ScreeningConfig(threshold=1.0))
        assert set(res.selected.tolist()) == set(np.flatnonzero(res.utilities >= 1.0).tolist())

    def test_validation_errors(self):
        X, y = toy_data()
        with pytest.raises(ValueError, match="at least 10"):
            screen(X[:5], y[:5], ScreeningConfig())
        with pytest.raises(ValueError, match="dimension mismatch"):
            screen(X, y[:-1], ScreeningConfig())
        with pytest.raises(ValueError, match="status"):
            screen(X, y, ScreeningConfig(method="qasis_censored"))
        with pytest.raises(ValueError, match="naive"):
            screen(X, y, ScreeningConfig(method="qasis"), status=np.ones(len(y), dtype=int))
        with pytest.raises(ValueError, match="non-finite"):
            screen(X, np.where(np.arange(len(y)) == 0, np.nan, y), ScreeningConfig())


class TestCensoredReductions:
    def test_censored_methods_reduce_to_complete(self):
        X, y = toy_data(seed=11, n=90)
        status = np.ones(90, dtype=int)
        base = screen(X, y, ScreeningConfig(alpha=0.5))
        cens = screen(X, y, ScreeningConfig(alpha=0.5, method="qasis_censored"), status=status)
        local = screen(
            X,
            y,
            ScreeningConfig(alpha=0.5, method="qasis_local", kernel="uniform", bandwidth=1.0),
            status=status,
        )
        assert np.max(np.abs(cens.utilities - base.utilities)) < 1e-10
        assert np.max(np.abs(local.utilities - base.utilities)) < 1e-10
        assert np.array_equal(cens.ranking, base.ranking)
        assert np.array_equal(local.ranking, base.ranking)

    def test_naive_equals_qasis_on_observed_times(self):
        rng = np.random.default_rng(12)
        X, y = toy_data(seed=12, n=150)
        t, status = censor(y, rng, level=5.0)
        assert 0.05 < 1 - status.mean() < 0.6
        naive = screen(X, t, ScreeningConfig(alpha=0.5, method="naive"), status=status)
        plain = screen(X, t, ScreeningConfig(alpha=0.5))
        assert np.array_equal(naive.utilities, plain.utilities)

    def test_censored_screen_runs_and_ranks_signal(self):
        rng = np.random.default_rng(13)
        X, y = toy_data(seed=13, n=200, p=30)
        t, status = censor(y, rng, level=6.0)
        res = screen(X, t, ScreeningConfig(alpha=0.5, method="qasis_censored"), status=status)
        assert 0 in res.ranking[:5].tolist()
        res_loc = screen(X, t, ScreeningConfig(alpha=0.5, method="qasis_local"), status=status)
        assert 0 in res_loc.ranking[:5].tolist()

    def test_unreachable_alpha_propagates(self):
        from qascreen.survival import UnreachableQuantileError

        X, _ = toy_data(seed=14, n=40)
        t = np.arange(1.0, 41.0)
        status = np.zeros(40, dtype=int)
        status[:4] = 1  # KM distribution reaches only ~0.1
        with pytest.raises(UnreachableQuantileError):
            screen(X, t, ScreeningConfig(alpha=0.9, method="qasis_censored"), status=status)


class TestScreenMany:
    def test_matches_individual_screens(self):
        rng = np.random.default_rng(15)
        X, y = toy_data(seed=15, n=140, p=20)
        t, status = censor(y, rng)
        configs = [
            ScreeningConfig(alpha=a, method=m)
            for m in ("qasis_censored", "qasis_local", "naive")
            for a in (0.5, 0.25)
        ]
        combined = screen_many(X, t, configs, status=status)
        for cfg, res in zip(configs, combined):
            solo = screen(X, t, cfg, status=status)
            assert np.array_equal(res.utilities, solo.utilities), cfg
            assert np.array_equal(res.ranking, solo.ranking)

    def test_empty(self):
        assert screen_many(np.ones((10, 2)), np.ones(10), []) == []


class TestExampleReplication:
    def test_example_1b_actives_in_top_keep(self):
        from qascreen.simulate import make_example

        inst = make_example("1b", seed=(99, 0))
        res = screen(inst.X, inst.y, ScreeningConfig(alpha=0.5))
        positions = {j: int(np.flatnonzero(res.ranking == j)[0]) for j in (0, 1, 2, 3)}
        assert max(positions.values()) < 66


class TestEstimator:
    def test_fit_transform_support(self):
        X, y = toy_data(seed=16, n=150, p=25)
        est = QuantileScreener(alpha=0.5, keep=5)
        Xt = est.fit(X, y).transform(X)
        assert Xt.shape == (150, 5)
        assert est.get_support().sum() == 5
        assert est.get_support()[0]
        assert np.array_equal(np.flatnonzero(est.get_support()), est.selected_)

    def test_get_set_params_roundtrip(self):
        est = QuantileScreener(alpha=0.3, method="nis", keep=7)
        params = est.get_params()
        assert params["alpha"] == 0.3 and params["method"] == "nis"
        est2 = QuantileScreener().set_params(**params)
        assert est2.get_params() == params

    def test_clone_compatible(self):
        from sklearn.base import clone

        est = clone(QuantileScreener(alpha=0.8, threshold=0.5))
        assert est.alpha == 0.8 and est.threshold == 0.5

    def test_inverse_transform_shape(self):
        X, y = toy_data(seed=17, n=120, p=10)
        est = QuantileScreener(keep=3).fit(X, y)
        back = est.inverse_transform(est.transform(X))
        assert back.shape == X.shape

    def test_censored_fit(self):
        rng = np.random.default_rng(18)
        X, y = toy_data(seed=18, n=130, p=15)
        t, status = censor(y, rng)
        est = QuantileScreener(method="qasis_censored", keep=4).fit(X, t, status=status)
        assert est.get_support().sum() == 4

    def test_nis_center_is_mean(self):
        X, y = toy_data(seed=19)
        est = QuantileScreener(method="nis").fit(X, y)
        assert est.center_ == pytest.approx(float(np.mean(y)))

    def test_qasis_center_is_sample_quantile(self):
        X, y = toy_data(seed=20)
        est = QuantileScreener(alpha=0.75).fit(X, y)
        assert est.center_ == sample_quantile(y, 0.75)
