import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hodebias.elements import Element, FiniteSupportDistribution, KLinearForm
from hodebias.errors import (
    EnumerationCapExceeded,
    OrderExceedsFamily,
    PilotOutsideDomain,
    UnequalSplit,
)
from hodebias.estimator import (
    DerivativeFamily,
    OrderSchedule,
    cross_fit,
    one_sided,
    pilot_invariance_gap,
    resolve_order,
    unbiasedness_gap,
)
from hodebias.functionals import build_precision, linear_test_functional, quadratic_test_functional
from hodebias.ustat import mean_element

from .conftest import rand_spd, rand_sym, rel_err


def sc(x):
    return Element.scalar(x)


def inverse_1d(max_order=4):
    """``1 / sigma`` on positive scalars; ``D^k = (-1)^k k! sigma^-(k+1) prod h``."""

    def deriv(x, k):
        s = x.mat[0, 0]
        c = (-1) ** k * math.factorial(k) / s ** (k + 1)
        return KLinearForm(k, lambda *hs: c * math.prod(h.mat[0, 0] for h in hs))

    return DerivativeFamily(
        "inverse", lambda x: 1.0 / x.mat[0, 0], deriv, max_order,
        lambda x: None if x.mat[0, 0] > 0 else "non-positive",
    )


class TestOneSided:
    def test_pilot_at_sample_mean(self):
        rep = one_sided(inverse_1d(), sc(2), [sc(1), sc(3)], 1)
        assert rep.value == 0.5
        assert rep.per_order_terms == (0.5, 0.0)

    def test_hand_evaluation(self):
        # 1/1 - (2 - 1) / 1^2
        assert one_sided(inverse_1d(), sc(1), [sc(1), sc(3)], 1).value == 0.0

    def test_s_zero_is_plugin_at_pilot(self, rng):
        fam, _ = build_precision(np.ones(3), np.arange(1.0, 4.0))
        pilot = Element.dense(rand_spd(rng, 3))
        sample = [Element.dense(rand_spd(rng, 3)) for _ in range(4)]
        assert one_sided(fam, pilot, sample, 0).value == fam.value(pilot)

    def test_errors(self):
        fam = inverse_1d(max_order=2)
        with pytest.raises(OrderExceedsFamily):
            one_sided(fam, sc(1), [sc(1), sc(2), sc(3)], 3)
        with pytest.raises(PilotOutsideDomain):
            one_sided(fam, sc(-1), [sc(1), sc(2)], 1)
        with pytest.raises(EnumerationCapExceeded):
            one_sided(inverse_1d(), sc(1), [sc(1.0)] * 300, 3, cap=10_000)

    @given(st.integers(0, 4), st.integers(0, 10_000))
    def test_report_sums_to_value(self, s, seed):
        rng = np.random.default_rng(seed)
        xs = rng.uniform(0.5, 2.0, size=6)
        rep = one_sided(inverse_1d(), sc(float(rng.uniform(0.8, 1.5))), [sc(x) for x in xs], s)
        assert len(rep.per_order_terms) == s + 1
        assert rel_err(rep.value, math.fsum(rep.per_order_terms)) <= 1e-12

    def test_scalar_inverse_matches_expansion(self):
        # 1/b - U1/b^2 + U2/b^3 with U-statistics of x - b
        xs = [0.8, 1.1, 1.7, 2.0]
        b = 1.2
        h = [x - b for x in xs]
        u1 = sum(h) / 4
        u2 = sum(h[i] * h[j] for i in range(4) for j in range(i + 1, 4)) / 6
        expect = 1 / b - u1 / b**2 + u2 / b**3
        got = one_sided(inverse_1d(), sc(b), [sc(x) for x in xs], 2).value
        assert got == pytest.approx(expect, rel=1e-14)


class TestCrossFit:
    def test_hand_example(self):
        rep = cross_fit(inverse_1d(), mean_element, [sc(1), sc(3)], [sc(2), sc(2)], OrderSchedule.fixed(1))
        assert rep.side_a.value == 0.5
        assert rep.side_b.value == 0.5
        assert rep.value == 0.5

    def test_swap_symmetry(self, rng):
        fam, _ = build_precision(np.ones(3), np.ones(3))
        p1 = [Element.dense(rand_spd(rng, 3)) for _ in range(5)]
        p2 = [Element.dense(rand_spd(rng, 3)) for _ in range(5)]
        sch = OrderSchedule.fixed(3)
        a = cross_fit(fam, mean_element, p1, p2, sch)
        b = cross_fit(fam, mean_element, p2, p1, sch)
        assert a.value == b.value
        assert a.value == 0.5 * (a.side_a.value + a.side_b.value)

    def test_equal_sides(self):
        rep = cross_fit(inverse_1d(), lambda s: sc(1.0), [sc(1.0)] * 2, [sc(1.0)] * 2, OrderSchedule.fixed(2))
        assert rep.value == 1.0

    def test_unequal_split(self):
        with pytest.raises(UnequalSplit):
            cross_fit(inverse_1d(), mean_element, [sc(1)], [sc(1), sc(2)], OrderSchedule.fixed(1))


class TestOrderSchedule:
    def test_examples(self):
        assert resolve_order(OrderSchedule.log_of_n(), 1) == 1
        assert resolve_order(OrderSchedule.log_of_n(), 500) == 7
        assert resolve_order(OrderSchedule.fixed(2), 12345) == 2

    def test_parse(self):
        assert OrderSchedule.parse("log").mode == "log"
        assert OrderSchedule.parse(3) == OrderSchedule.fixed(3)

    @given(st.integers(1, 10**6))
    def test_log_schedule_matches_definition(self, n):
        assert resolve_order(OrderSchedule.log_of_n(), n) == math.floor(math.log(math.e * n) + 1e-12)


class TestPolynomialExactness:
    def test_single_pilot(self, rng):
        fam = quadratic_test_functional(np.ones(2), np.ones(2))
        sample = [Element.dense(rand_sym(rng, 2)) for _ in range(3)]
        assert pilot_invariance_gap(fam, sample, 2, [Element.dense(np.eye(2))]) == 0.0

    def test_linear(self, rng):
        fam = linear_test_functional(rng.standard_normal(3), rng.standard_normal(3))
        sample = [Element.dense(rand_sym(rng, 3)) for _ in range(5)]
        pilots = [Element.dense(rand_sym(rng, 3)) for _ in range(4)]
        assert pilot_invariance_gap(fam, sample, 1, pilots) <= 1e-12 * 10

    @given(st.integers(0, 10_000))
    def test_quadratic_pilot_invariance(self, seed):
        rng = np.random.default_rng(seed)
        fam = quadratic_test_functional(rng.standard_normal(3), rng.standard_normal(3))
        sample = [Element.dense(rand_sym(rng, 3)) for _ in range(6)]
        pilots = [Element.dense(rand_sym(rng, 3, 2.0)) for _ in range(2)]
        ref = abs(one_sided(fam, pilots[0], sample, 2).value)
        assert pilot_invariance_gap(fam, sample, 2, pilots) <= 1e-9 * max(ref, 1.0)

    def test_quadratic_pilot_free_value(self, rng):
        # pilot-free: the average of eta1^T W_i W_j eta2 over ordered pairs i != j
        eta1, eta2 = rng.standard_normal(2), rng.standard_normal(2)
        fam = quadratic_test_functional(eta1, eta2)
        W = [rand_sym(rng, 2) for _ in range(5)]
        pairs = [(i, j) for i in range(5) for j in range(5) if i != j]
        direct = sum(eta1 @ W[i] @ W[j] @ eta2 for i, j in pairs) / len(pairs)
        got = one_sided(fam, Element.dense(rand_sym(rng, 2)), [Element.dense(w) for w in W], 2).value
        assert got == pytest.approx(direct, rel=1e-10, abs=1e-12)

    def test_unbiasedness_examples(self, rng):
        quad = quadratic_test_functional(np.ones(2), np.array([1.0, -1.0]))
        deg = FiniteSupportDistribution.uniform([Element.dense(np.diag([1.0, 2.0]))])
        assert unbiasedness_gap(quad, deg, 3, Element.dense(np.eye(2)), 2) <= 1e-12
        two = FiniteSupportDistribution.uniform([Element.dense(rand_sym(rng, 2)) for _ in range(2)])
        assert unbiasedness_gap(quad, two, 3, Element.dense(rand_sym(rng, 2)), 2) <= 1e-10
        lin = linear_test_functional(np.ones(2), np.ones(2))
        assert unbiasedness_gap(lin, two, 3, Element.dense(rand_sym(rng, 2)), 1) <= 1e-12

    def test_quadratic_with_s1_is_biased(self, rng):
        # degree above s: the order-one estimator misses the variance term
        quad = quadratic_test_functional(np.ones(2), np.ones(2))
        two = FiniteSupportDistribution.uniform([Element.dense(np.eye(2)), Element.dense(-np.eye(2))])
        assert unbiasedness_gap(quad, two, 2, Element.dense(np.eye(2)), 1) > 1e-3
