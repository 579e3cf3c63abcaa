import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hodebias.baselines import (
    BaselineConfig,
    PilotEstimator,
    PluginFunctional,
    eig_floor,
    fit_median_of_means,
    fit_sample_moments,
    hodse_estimate,
    iterated_bootstrap_estimate,
    jackknife_estimate,
    kl_blocks,
    kl_blockwise_estimate,
    plugin_estimate,
    run_baseline,
)
from hodebias.elements import Element, GramSample, KLinearForm, RegressionSample
from hodebias.errors import (
    DegenerateResample,
    InsufficientData,
    NonSymmetric,
    PilotOutsideDomain,
    TooManyBlocks,
)
from hodebias.estimator import DerivativeFamily, one_sided
from hodebias.functionals import build_precision, build_regression, linear_test_functional
from hodebias.ustat import complete_ustat, mean_element

from .conftest import rand_spd, rand_sym, rel_err


def sc(x):
    return Element.scalar(x)


def square_family():
    """``f(m) = m^2`` on scalars."""

    def deriv(x, k):
        m = x.mat[0, 0]
        if k == 1:
            return KLinearForm(1, lambda h: 2 * m * h.mat[0, 0])
        if k == 2:
            return KLinearForm(2, lambda h, g: 2 * h.mat[0, 0] * g.mat[0, 0])
        return KLinearForm(k, lambda *hs: 0.0)

    return DerivativeFamily("square", lambda x: x.mat[0, 0] ** 2, deriv, 6, degree=2)


class TestPilots:
    def test_sample_moments_gram(self):
        m = fit_sample_moments(GramSample(np.eye(2)))
        assert np.allclose(m.mat, np.diag([0.5, 0.5]))
        x = np.array([[1.0, 2.0, -1.0]])
        assert np.allclose(fit_sample_moments(GramSample(x)).mat, np.outer(x[0], x[0]))

    def test_sample_moments_regression(self):
        m = fit_sample_moments(RegressionSample(np.eye(2), np.array([2.0, 0.0])))
        assert np.allclose(m.vec, [1.0, 0.0])

    def test_median_of_means(self):
        assert fit_median_of_means([sc(0), sc(0), sc(100)], 3).allclose(sc(0))
        assert fit_median_of_means([sc(1), sc(2), sc(3), sc(4)], 2).allclose(sc(2.5))
        X = np.random.default_rng(0).standard_normal((9, 2))
        assert fit_median_of_means(GramSample(X), 1).allclose(fit_sample_moments(GramSample(X)))
        with pytest.raises(TooManyBlocks):
            fit_median_of_means([sc(1)], 2)

    def test_median_of_means_pairs(self, rng):
        X, y = rng.standard_normal((12, 2)), rng.standard_normal(12)
        m = fit_median_of_means(RegressionSample(X, y), 3)
        assert m.kind == "pair" and m.vec.shape == (2,)

    def test_eig_floor_examples(self, rng):
        S = rand_spd(rng, 3)
        assert eig_floor(S, 1e-6) is S
        assert np.allclose(eig_floor(np.zeros((2, 2)), 0.1), 0.1 * np.eye(2))
        assert np.allclose(eig_floor(np.diag([1.0, -1.0]), 0.5), np.diag([1.0, 0.5]))
        with pytest.raises(NonSymmetric):
            eig_floor(np.array([[1.0, 2.0], [0.0, 1.0]]), 0.1)

    def test_eig_floor_on_pairs(self):
        e = Element.pair(np.diag([1.0, -1.0]), np.array([3.0, 4.0]))
        out = eig_floor(e, 0.5)
        assert np.allclose(out.mat, np.diag([1.0, 0.5]))
        assert np.array_equal(out.vec, e.vec)

    @given(st.integers(0, 10**6))
    def test_eig_floor_output_spectrum(self, seed):
        rng = np.random.default_rng(seed)
        M = rand_sym(rng, 4)
        out = eig_floor(M, 1e-3)
        w = np.linalg.eigvalsh(out)
        floor = 1e-3 * max(1.0, np.max(np.abs(np.linalg.eigvalsh(M))))
        assert np.allclose(out, out.T)
        assert w[0] >= floor * (1 - 1e-9)

    def test_pilot_estimator_variants(self, rng):
        X = rng.standard_normal((20, 3))
        g = GramSample(X)
        assert PilotEstimator()(g).allclose(fit_sample_moments(g))
        assert PilotEstimator("median_of_means", blocks=4)(g).allclose(fit_median_of_means(g, 4))
        floored = PilotEstimator("eig_floor", epsilon=0.5)(GramSample(X[:2]))
        assert np.linalg.eigvalsh(floored.mat)[0] > 0
        with pytest.raises(ValueError):
            PilotEstimator("bogus")
        with pytest.raises(ValueError):
            PilotEstimator("eig_floor", epsilon=0.0)


class TestPluginAndJackknife:
    def test_plugin_examples(self, rng):
        fam, _ = build_precision(np.eye(2)[0], np.eye(2)[0])
        assert plugin_estimate(PluginFunctional(fam), GramSample(np.sqrt(2) * np.eye(2))) == pytest.approx(1.0)
        eta = rng.standard_normal(2)
        reg, _ = build_regression(eta)
        y = rng.standard_normal(2)
        sample = RegressionSample(np.sqrt(2) * np.eye(2), y)
        assert plugin_estimate(PluginFunctional(reg), sample) == pytest.approx(eta @ mean_element(sample).vec)

    def test_plugin_domain(self):
        fam, _ = build_precision(np.ones(2), np.ones(2))
        with pytest.raises(PilotOutsideDomain):
            plugin_estimate(PluginFunctional(fam), GramSample(np.array([[1.0, 0.0]])))

    def test_jackknife_linear_is_plugin(self, rng):
        fam = linear_test_functional(rng.standard_normal(3), rng.standard_normal(3))
        sample = [Element.dense(rand_sym(rng, 3)) for _ in range(7)]
        p = PluginFunctional(fam)
        assert rel_err(jackknife_estimate(p, sample), plugin_estimate(p, sample)) <= 1e-12

    def test_jackknife_square(self):
        assert jackknife_estimate(PluginFunctional(square_family()), [sc(0), sc(2)]) == pytest.approx(0.0, abs=1e-15)

    def test_jackknife_constant(self):
        assert jackknife_estimate(PluginFunctional(square_family()), [sc(3)] * 5) == pytest.approx(9.0, rel=1e-14)

    def test_jackknife_removes_square_bias(self):
        # for f(m) = m^2 the jackknife equals the unbiased U-statistic of pairs
        xs = [0.3, 1.7, -0.4, 2.2, 0.9]
        expect = sum(a * b for a, b in itertools.combinations(xs, 2)) / math.comb(5, 2)
        got = jackknife_estimate(PluginFunctional(square_family()), [sc(x) for x in xs])
        assert got == pytest.approx(expect, rel=1e-12)

    def test_jackknife_custom_moment_map(self, rng):
        fam = linear_test_functional(np.ones(2), np.ones(2))
        sample = [Element.dense(rand_sym(rng, 2)) for _ in range(5)]
        p = PluginFunctional(fam, moment_map=mean_element)
        assert rel_err(jackknife_estimate(p, sample), plugin_estimate(p, sample)) <= 1e-12

    def test_jackknife_needs_two(self):
        with pytest.raises(InsufficientData):
            jackknife_estimate(PluginFunctional(square_family()), [sc(1)])


class TestIteratedBootstrap:
    def test_order_zero_is_plugin(self, rng):
        p = PluginFunctional(square_family())
        sample = [sc(x) for x in rng.standard_normal(10)]
        assert iterated_bootstrap_estimate(p, sample, 0, 40, 1) == plugin_estimate(p, sample)

    def test_linear_functional_unchanged(self, rng):
        fam = linear_test_functional(np.ones(2), np.array([1.0, -0.5]))
        p = PluginFunctional(fam)
        sample = [Element.dense(rand_sym(rng, 2)) for _ in range(30)]
        base = plugin_estimate(p, sample)
        vals = [iterated_bootstrap_estimate(p, sample, 1, 40, s) for s in range(20)]
        se = np.std(vals) / math.sqrt(len(vals))
        assert abs(np.mean(vals) - base) <= 3 * se + 1e-12

    def test_square_bias_is_removed_on_average(self):
        # f(m) = m^2: one bootstrap move inflates f by the resampling variance
        rng = np.random.default_rng(4)
        xs = rng.standard_normal(25) + 1.0
        sample = [sc(x) for x in xs]
        p = PluginFunctional(square_family())
        vals = [iterated_bootstrap_estimate(p, sample, 1, 200, s) for s in range(10)]
        m = xs.mean()
        var_hat = np.mean((xs - m) ** 2) / len(xs)
        assert np.mean(vals) == pytest.approx(m**2 - var_hat, abs=0.01)

    def test_deterministic(self, rng):
        p = PluginFunctional(square_family())
        sample = [sc(x) for x in rng.standard_normal(10)]
        assert iterated_bootstrap_estimate(p, sample, 2, 10, 5) == iterated_bootstrap_estimate(p, sample, 2, 10, 5)

    def test_degenerate_resample(self):
        # a domain that contains the pilot and nothing else
        base = square_family()
        pinned = DerivativeFamily("pinned", base.value, base.derivative, 6,
                                  lambda x: None if x.mat[0, 0] == 1.0 else "off the point")
        with pytest.raises(DegenerateResample):
            iterated_bootstrap_estimate(PluginFunctional(pinned), [sc(0), sc(2)], 1, 5, 0)


class TestHodse:
    def test_s1_is_plugin(self, rng):
        fam, _ = build_precision(rng.standard_normal(3), rng.standard_normal(3))
        X = rng.standard_normal((20, 3))
        g = GramSample(X)
        assert rel_err(hodse_estimate(fam, g, 1), plugin_estimate(PluginFunctional(fam), g)) <= 1e-12

    def test_s2_hand_expansion(self):
        xs = [0.5, 1.5, 2.5, 1.0]
        fam = square_family()
        m = np.mean(xs)
        h = [x - m for x in xs]
        u2 = sum(a * b for a, b in itertools.combinations(h, 2)) / 6
        assert hodse_estimate(fam, [sc(x) for x in xs], 2) == pytest.approx(m**2 + u2, rel=1e-13)

    def test_constant(self):
        assert hodse_estimate(square_family(), [sc(2.0)] * 4, 3) == pytest.approx(4.0, rel=1e-15)


class TestKL:
    def test_blocks(self):
        blocks = kl_blocks(10, 2)
        assert len(blocks) == 4
        assert [len(b) for b in blocks] == [4, 2, 2, 2]
        assert np.array_equal(np.concatenate(blocks), np.arange(10))
        with pytest.raises(InsufficientData):
            kl_blocks(3, 2)

    def test_s0_single_block(self):
        xs = [sc(x) for x in (1.0, 2.0, 3.0)]
        assert kl_blockwise_estimate(square_family(), xs, 0) == pytest.approx(4.0)

    def test_constant(self):
        for s in range(4):
            assert kl_blockwise_estimate(square_family(), [sc(1.5)] * 12, s) == pytest.approx(2.25)

    def test_s1_linear_unbiased_by_enumeration(self):
        # f linear, s = 1, two blocks: E[f(t0) + f'(t1 - t0)] = f(theta)
        fam = linear_test_functional(np.ones(1), np.ones(1))
        atoms, probs = (0.0, 3.0), (0.25, 0.75)
        n = 4
        expect = 0.0
        for idx in itertools.product(range(2), repeat=n):
            p = math.prod(probs[i] for i in idx)
            expect += p * kl_blockwise_estimate(fam, [sc(atoms[i]) for i in idx], 1)
        assert expect == pytest.approx(0.25 * 0 + 0.75 * 3, rel=1e-13)

    def test_order_two_telescopes_by_enumeration(self):
        # f(m) = m^2 is its own order-2 Taylor polynomial, so K&L(2) is unbiased
        atoms, probs = (0.0, 2.0), (0.5, 0.5)
        n = 4  # four blocks of one observation each
        expect = 0.0
        for idx in itertools.product(range(2), repeat=n):
            p = math.prod(probs[i] for i in idx)
            expect += p * kl_blockwise_estimate(square_family(), [sc(atoms[i]) for i in idx], 2)
        assert expect == pytest.approx(1.0, rel=1e-13)

    def test_seeded_shuffle(self, rng):
        xs = [sc(x) for x in rng.standard_normal(12)]
        a = kl_blockwise_estimate(square_family(), xs, 2, seed=1)
        b = kl_blockwise_estimate(square_family(), xs, 2, seed=1)
        assert a == b


class TestRunBaseline:
    def test_dispatch(self, rng):
        fam = square_family()
        xs = [sc(x) for x in rng.standard_normal(12)]
        p = PluginFunctional(fam)
        assert run_baseline(BaselineConfig("plugin"), fam, xs) == plugin_estimate(p, xs)
        assert run_baseline(BaselineConfig("jackknife"), fam, xs) == jackknife_estimate(p, xs)
        assert run_baseline(BaselineConfig("hodse", 2), fam, xs) == hodse_estimate(fam, xs, 2)
        assert run_baseline(BaselineConfig("kl", 2), fam, xs) == kl_blockwise_estimate(fam, xs, 2)
        assert run_baseline(BaselineConfig("ib", 1, 5, 3), fam, xs) == iterated_bootstrap_estimate(p, xs, 1, 5, 3)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BaselineConfig("nope")
        with pytest.raises(ValueError):
            BaselineConfig("ib", order=1, mc_size=0)


def test_hodse_matches_generic_expansion(rng):
    fam, _ = build_precision(rng.standard_normal(2), rng.standard_normal(2))
    sample = [Element.dense(rand_spd(rng, 2)) for _ in range(5)]
    m = mean_element(sample)
    expect = fam.value(m) + 0.5 * complete_ustat(fam.derivative(m, 2), sample, m)
    assert rel_err(hodse_estimate(fam, sample, 2), expect) <= 1e-12
    assert hodse_estimate(fam, sample, 2) == one_sided(fam, m, sample, 2).value
