import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal

import bicov as bc
from bicov import BivariateModel, FieldSample, matern, stable
from bicov.field import _parsimonious_matern_rho_bound, check_pd, gram
from bicov.spectral import cross_spectral_profile


def colocated_design(seed, n_sites, extent=10.0, d=2):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, extent, size=(n_sites, d))
    return np.repeat(pts, 2, axis=0), np.tile([1, 2], n_sites)


MODEL = bc.stable_bivariate(1.0, 1.5, 0.4, 0.8, 0.9, 0.6, 0.9, 1.1, 0.8)


class TestFieldSample:
    def test_validation(self):
        with pytest.raises(ValueError):
            FieldSample(np.zeros((4, 5)), np.ones(4, dtype=int))
        with pytest.raises(ValueError):
            FieldSample(np.zeros((4, 2)), np.ones(3, dtype=int))
        with pytest.raises(ValueError):
            FieldSample(np.zeros((4, 2)), np.array([1, 2, 3, 1]))
        with pytest.raises(ValueError):
            FieldSample(np.zeros((4, 2)), np.ones(4, dtype=int),
                        values=np.zeros(5))

    def test_multidraw_values_align(self):
        s = FieldSample(np.zeros((4, 2)), np.array([1, 2, 1, 2]),
                        values=np.zeros((3, 4)))
        assert s.values.shape == (3, 4)


class TestGram:
    def test_bitwise_symmetry(self):
        locs, comps = colocated_design(7, 40)
        m = gram(MODEL, FieldSample(locs, comps))
        assert np.array_equal(m, m.T)

    def test_entries_match_member_correlations(self):
        locs = np.array([[0.0, 0.0], [1.5, 0.0], [0.0, 2.0]])
        comps = np.array([1, 2, 1])
        m = gram(MODEL, FieldSample(locs, comps))
        s1, s2, rho = MODEL.sigma1, MODEL.sigma2, MODEL.rho
        assert m[0, 0] == s1 * s1
        assert m[1, 1] == s2 * s2
        assert m[0, 1] == pytest.approx(
            rho * s1 * s2 * bc.evaluate(MODEL.psi12, 1.5), rel=1e-15)
        assert m[0, 2] == pytest.approx(
            s1 * s1 * bc.evaluate(MODEL.psi11, 2.0), rel=1e-15)

    def test_nugget_on_matching_component_only(self):
        locs = np.array([[0.0, 0.0], [1.0, 1.0]])
        comps = np.array([1, 2])
        m = gram(MODEL, FieldSample(locs, comps), nugget1=0.5, nugget2=0.125)
        assert m[0, 0] == MODEL.sigma1 ** 2 + 0.5
        assert m[1, 1] == MODEL.sigma2 ** 2 + 0.125


class TestCheckPd:
    def test_requires_exact_symmetry(self):
        m = np.eye(3)
        m[0, 1] = 1e-17
        with pytest.raises(ValueError):
            check_pd(m)

    def test_pass_and_fail(self):
        locs, comps = colocated_design(3, 50)
        ok = check_pd(gram(MODEL, FieldSample(locs, comps)))
        assert ok.passed
        assert ok.min_eigenvalue >= ok.threshold

        bad = np.array([[1.0, 2.0], [2.0, 1.0]])
        res = check_pd(bad)
        assert not res.passed
        assert res.min_eigenvalue == pytest.approx(-1.0)
        assert res.threshold == pytest.approx(-1e-8)


class TestSimulate:
    def test_deterministic_per_seed(self):
        locs, comps = colocated_design(0, 30)
        a = bc.simulate(MODEL, locs, comps, seed=11)
        b = bc.simulate(MODEL, locs, comps, seed=11)
        c = bc.simulate(MODEL, locs, comps, seed=12)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)
        assert "jitter" in a.info

    def test_means_and_draw_shape(self):
        locs, comps = colocated_design(1, 20)
        out = bc.simulate(MODEL, locs, comps, seed=5, n_draws=3,
                          mean1=10.0, mean2=-10.0)
        assert out.values.shape == (3, 40)
        assert abs(np.mean(out.values[:, comps == 1]) - 10.0) < 2.0
        assert abs(np.mean(out.values[:, comps == 2]) + 10.0) < 2.0

    def test_colocated_correlation_matches_rho(self):
        # one site observed in both components: correlation over draws is rho
        locs = np.zeros((2, 2))
        comps = np.array([1, 2])
        out = bc.simulate(MODEL, locs, comps, seed=3, n_draws=10_000)
        corr = np.corrcoef(out.values[:, 0], out.values[:, 1])[0, 1]
        assert corr == pytest.approx(MODEL.rho, abs=0.03)

    def test_zero_rho_components_uncorrelated(self):
        m0 = bc.stable_bivariate(1.0, 1.5, 0.0, 0.8, 0.9, 0.6, 0.9, 1.1, 0.8)
        locs = np.zeros((2, 2))
        comps = np.array([1, 2])
        out = bc.simulate(m0, locs, comps, seed=3, n_draws=10_000)
        corr = np.corrcoef(out.values[:, 0], out.values[:, 1])[0, 1]
        assert corr == pytest.approx(0.0, abs=0.03)


class TestNll:
    def test_matches_direct_gaussian_density(self):
        locs, comps = colocated_design(9, 20)
        data = bc.simulate(MODEL, locs, comps, seed=21, mean1=1.0, mean2=2.0)
        value, mu1, mu2 = bc.nll(MODEL, data)
        cov = gram(MODEL, data)
        mean = np.where(comps == 1, mu1, mu2)
        direct = -multivariate_normal(mean=mean, cov=cov).logpdf(data.values)
        assert value == pytest.approx(direct, rel=1e-9)

    def test_requires_values(self):
        locs, comps = colocated_design(9, 12)
        with pytest.raises(ValueError):
            bc.nll(MODEL, FieldSample(locs, comps))


class TestFitMl:
    def test_rejects_constant_component(self):
        locs, comps = colocated_design(2, 15)
        vals = np.where(comps == 1, 3.25, np.arange(30, dtype=float))
        data = FieldSample(locs, comps, values=vals)
        with pytest.raises(ValueError, match="degenerate"):
            bc.fit_ml(data, "stable")

    def test_rejects_undersized_component(self):
        rng = np.random.default_rng(0)
        locs = rng.uniform(0, 5, size=(12, 2))
        comps = np.array([1] * 9 + [2] * 3)
        data = FieldSample(locs, comps, values=rng.standard_normal(12))
        with pytest.raises(ValueError, match="at least 10"):
            bc.fit_ml(data, "stable")

    def test_rejects_unknown_kind(self):
        locs, comps = colocated_design(2, 15)
        data = bc.simulate(MODEL, locs, comps, seed=0)
        with pytest.raises(ValueError, match="unknown model kind"):
            bc.fit_ml(data, "gneiting")

    def test_duplicate_rows_fall_back_to_nugget_floor(self):
        # two copies of every row make the Gram exactly singular for any
        # parameter value, forcing the floor of 1e-8 x empirical variance
        rng = np.random.default_rng(4)
        pts = rng.uniform(0, 5, size=(10, 2))
        locs = np.vstack([np.repeat(pts, 2, axis=0)] * 2)
        comps = np.tile(np.tile([1, 2], 10), 2)
        half = bc.simulate(MODEL, np.repeat(pts, 2, axis=0),
                           np.tile([1, 2], 10), seed=8)
        data = FieldSample(locs, comps, values=np.concatenate([half.values] * 2))
        fit = bc.fit_ml(data, "stable", n_starts=1, seed=0, max_evals=40)
        emp1 = np.var(data.values[comps == 1])
        assert fit.nugget1 >= 1e-8 * emp1 * (1.0 - 1e-12)
        assert math.isfinite(fit.nll)

    def test_separable_truth_recovers_rho(self):
        truth = bc.stable_bivariate(1.0, 1.5, 0.5, 0.8, 0.8, 0.8, 1.2, 1.2, 1.2)
        locs, comps = colocated_design(0, 60)
        data = bc.simulate(truth, locs, comps, seed=0, mean1=0.5, mean2=-0.25)
        fit = bc.fit_ml(data, "stable", n_starts=2, seed=0)
        assert fit.kind == "stable"
        assert fit.model.rho == pytest.approx(0.5, abs=0.05)
        assert fit.aic == pytest.approx(2.0 * fit.n_params + 2.0 * fit.nll)
        # the returned model passes its own validity pipeline
        rep = bc.max_rho_stable(fit.model, 2)
        assert abs(fit.model.rho) <= rep.rho_bound + 1e-12

    def test_kind_aliases(self):
        locs, comps = colocated_design(5, 12)
        data = bc.simulate(MODEL, locs, comps, seed=2)
        fit = bc.fit_ml(data, "StableBivariate", n_starts=1, seed=0,
                        max_evals=30)
        assert fit.kind == "stable"


class TestCokrige:
    def test_exact_interpolation_at_observations(self):
        locs, comps = colocated_design(6, 25)
        data = bc.simulate(MODEL, locs, comps, seed=13, mean1=1.0, mean2=-2.0)
        idx = np.where(comps == 1)[0][:5]
        pred, var = bc.cokrige(MODEL, data, data.locations[idx], 1,
                               mean1=1.0, mean2=-2.0)
        assert pred == pytest.approx(data.values[idx], abs=1e-7)
        assert np.all(var <= 1e-8)
        assert np.all(var >= -1e-8)

    def test_zero_rho_ignores_other_component(self):
        # with rho = 0 the cross covariance vanishes, so component 1 rows
        # cannot influence a component 2 prediction
        m0 = bc.stable_bivariate(1.0, 1.5, 0.0, 0.8, 0.9, 0.6, 0.9, 1.1, 0.8)
        locs, comps = colocated_design(8, 20)
        data = bc.simulate(m0, locs, comps, seed=17)
        only2 = FieldSample(data.locations[comps == 2], comps[comps == 2],
                            values=data.values[comps == 2])
        targets = np.array([[2.0, 3.0], [7.5, 1.0]])
        full_pred, full_var = bc.cokrige(m0, data, targets, 2)
        part_pred, part_var = bc.cokrige(m0, only2, targets, 2)
        assert full_pred == pytest.approx(part_pred, abs=1e-10)
        assert full_var == pytest.approx(part_var, abs=1e-10)

    def test_validation(self):
        locs, comps = colocated_design(6, 12)
        data = bc.simulate(MODEL, locs, comps, seed=1)
        with pytest.raises(ValueError):
            bc.cokrige(MODEL, data, np.zeros((2, 2)), 3)
        with pytest.raises(ValueError):
            bc.cokrige(MODEL, data, np.zeros((2, 3)), 1)
        with pytest.raises(ValueError):
            bc.cokrige(MODEL, FieldSample(locs, comps), np.zeros((2, 2)), 1)


class TestLooRmse:
    def test_matches_deleted_point_refits(self):
        locs, comps = colocated_design(10, 16)
        data = bc.simulate(MODEL, locs, comps, seed=29, mean1=3.0, mean2=1.0)
        shortcut = bc.loo_rmse(MODEL, data)

        _, mu1, mu2 = bc.nll(MODEL, data)
        sq = []
        for i in range(len(comps)):
            keep = np.arange(len(comps)) != i
            rest = FieldSample(data.locations[keep], comps[keep],
                               values=data.values[keep])
            pred, _ = bc.cokrige(MODEL, rest, data.locations[i:i + 1],
                                 int(comps[i]), mean1=mu1, mean2=mu2)
            sq.append((data.values[i] - pred[0]) ** 2)
        assert shortcut == pytest.approx(math.sqrt(np.mean(sq)), rel=1e-9)


class TestParsimoniousMaternBound:
    @pytest.mark.parametrize("nu1,nu2,d", [(0.6, 1.4, 1), (0.6, 1.4, 3),
                                           (1.0, 2.5, 3)])
    def test_bound_is_sharp_on_spectral_profile(self, nu1, nu2, d):
        # common scale and nu12 = mean: the density ratio is frequency free,
        # so the margin sits at zero across u when rho equals the bound
        b = _parsimonious_matern_rho_bound(nu1, nu2, d)
        assert 0.0 < b < 1.0
        assert b == _parsimonious_matern_rho_bound(nu2, nu1, d)
        s = 1.2
        m = BivariateModel(1.0, 1.0, b, matern(nu1, s),
                           matern(0.5 * (nu1 + nu2), s), matern(nu2, s))
        prof = cross_spectral_profile(m, d, np.array([0.1, 0.5, 1.0, 2.0, 5.0]))
        margin = prof.f11 * prof.f22 - b * b * prof.f12 ** 2
        assert np.max(np.abs(margin) / (prof.f11 * prof.f22)) < 1e-7

    def test_gram_pd_at_bound(self):
        b = _parsimonious_matern_rho_bound(0.6, 1.4, 2)
        m = BivariateModel(1.0, 1.3, b, matern(0.6, 1.1),
                           matern(1.0, 1.1), matern(1.4, 1.1))
        locs, comps = colocated_design(12, 60)
        assert check_pd(gram(m, FieldSample(locs, comps))).passed
