"""Loss, the unbiased risk estimator, conditions, and the improvement scale."""

import numpy as np
import pytest
from pytest import approx

from kshrink import (
    CanonicalModel,
    LossSpec,
    TrueParameters,
    UerInputs,
    check_hb1_conditions,
    check_hb2_conditions,
    loss,
    prial,
    uer,
)
from kshrink.estimators import EstimateSet


def two_group_model():
    x = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    v = np.array([np.eye(3), np.eye(3)])
    return CanonicalModel(x=x, v=v, s=5.0, n=10)


class TestLoss:
    def test_zero_at_truth(self):
        model = two_group_model()
        ls = LossSpec.inverse_v(model)
        truth = TrueParameters(mu=model.x.copy(), sigma2=2.0)
        assert loss(model.x, truth, ls) == 0.0

    def test_scalar_hand_example(self):
        # One-dimensional groups, unit weights, noise variance two,
        # errors +1 and -1: the loss is (1 + 1)/2 = 1.
        mu_hat = np.array([[1.0], [-1.0]])
        truth = TrueParameters(mu=np.zeros((2, 1)), sigma2=2.0)
        model = CanonicalModel(x=mu_hat, v=np.ones((2, 1, 1)), s=1.0, n=4)
        ls = LossSpec.inverse_v(model)
        assert loss(mu_hat, truth, ls) == approx(1.0)

    def test_noise_variance_rescales(self):
        mu_hat = np.array([[1.0], [-1.0]])
        model = CanonicalModel(x=mu_hat, v=np.ones((2, 1, 1)), s=1.0, n=4)
        ls = LossSpec.inverse_v(model)
        lo = loss(mu_hat, TrueParameters(mu=np.zeros((2, 1)), sigma2=2.0), ls)
        hi = loss(mu_hat, TrueParameters(mu=np.zeros((2, 1)), sigma2=4.0), ls)
        assert hi == approx(lo / 2.0)

    def test_positive_off_truth(self):
        rng = np.random.default_rng(5)
        model = two_group_model()
        ls = LossSpec.inverse_v(model)
        truth = TrueParameters(mu=rng.normal(size=(2, 3)), sigma2=1.0)
        assert loss(model.x, truth, ls) > 0.0

    def test_accepts_estimate_sets(self):
        model = two_group_model()
        ls = LossSpec.inverse_v(model)
        truth = TrueParameters(mu=np.zeros((2, 3)), sigma2=1.0)
        wrapped = EstimateSet(mu_hat=model.x)
        assert loss(wrapped, truth, ls) == approx(loss(model.x, truth, ls))

    def test_shape_mismatch(self):
        model = two_group_model()
        ls = LossSpec.inverse_v(model)
        truth = TrueParameters(mu=np.zeros((3, 3)), sigma2=1.0)
        with pytest.raises(ValueError, match="does not match"):
            loss(model.x, truth, ls)


def constant_inputs(phi, psi, f=1.0, g=1.0, trace=25.0):
    return UerInputs(
        f_stat=f, g_stat=g, scale_sum=10.0,
        p=5, k=5, n=20, trace_sum=trace,
        phi=phi, psi=psi,
        phi_f=0.0, phi_g=0.0, phi_s=0.0,
        psi_f=0.0, psi_g=0.0, psi_s=0.0,
    )


class TestUer:
    def test_no_shrink_returns_trace(self):
        assert uer(constant_inputs(0.0, 0.0)) == approx(25.0)

    def test_constant_mean_shrink_anchor(self):
        # phi = 18/22 at F = 1 removes (36 - 18) * 18/22 from the trace:
        # 25 - 324/22.
        got = uer(constant_inputs(18.0 / 22.0, 0.0))
        assert got == approx(10.272727272727272, abs=1e-12)

    def test_constant_zero_shrink_anchor(self):
        # The mirrored case psi = 3/22 at G = 1 removes (6 - 3) * 3/22.
        got = uer(constant_inputs(0.0, 3.0 / 22.0))
        assert got == approx(24.59090909090909, abs=1e-12)

    def test_vectorized_matches_scalar_loop(self):
        rng = np.random.default_rng(17)
        f = rng.uniform(0.2, 3.0, size=6)
        g = rng.uniform(0.2, 3.0, size=6)
        s = rng.uniform(5.0, 20.0, size=6)
        phi = 0.3 * f / (1.0 + f)
        psi = 0.1 * g / (1.0 + g)
        phi_f = 0.3 / (1.0 + f) ** 2
        psi_g = 0.1 / (1.0 + g) ** 2
        zeros = np.zeros(6)
        batch = UerInputs(
            f_stat=f, g_stat=g, scale_sum=s, p=5, k=5, n=20, trace_sum=25.0,
            phi=phi, psi=psi, phi_f=phi_f, phi_g=zeros, phi_s=zeros,
            psi_f=zeros, psi_g=psi_g, psi_s=zeros,
        )
        got = uer(batch)
        for i in range(6):
            one = UerInputs(
                f_stat=float(f[i]), g_stat=float(g[i]), scale_sum=float(s[i]),
                p=5, k=5, n=20, trace_sum=25.0,
                phi=float(phi[i]), psi=float(psi[i]),
                phi_f=float(phi_f[i]), phi_g=0.0, phi_s=0.0,
                psi_f=0.0, psi_g=float(psi_g[i]), psi_s=0.0,
            )
            assert got[i] == approx(uer(one), rel=1e-14)

    def test_rejects_nonpositive_statistics(self):
        with pytest.raises(ValueError, match="strictly positive"):
            constant_inputs(0.0, 0.0, f=0.0)

    def test_rejects_non_finite_factors(self):
        with pytest.raises(ValueError, match="finite"):
            UerInputs(
                f_stat=1.0, g_stat=1.0, scale_sum=1.0, p=5, k=5, n=20,
                trace_sum=25.0, phi=np.nan, psi=0.0,
                phi_f=0.0, phi_g=0.0, phi_s=0.0,
                psi_f=0.0, psi_g=0.0, psi_s=0.0,
            )


class TestHb1Conditions:
    def test_benchmark_constants_pass(self):
        rep = check_hb1_conditions(0.1, 0.1, 5, 5, 20)
        assert rep.minimax is True
        assert rep.proper_prior is None
        assert rep.margins["linear_lhs"] == approx(9.4)
        assert rep.margins["linear_rhs"] == approx(140.0)
        assert rep.margins["a_plus_c"] == approx(9.8)

    def test_margin_keys(self):
        rep = check_hb1_conditions(0.1, 0.1, 5, 5, 20)
        assert set(rep.margins) == {
            "dimension", "a_plus_c", "a_plus_c_stated",
            "linear", "linear_lhs", "linear_rhs",
        }

    def test_sum_boundary_fails(self):
        rep = check_hb1_conditions(0.0, 10.0, 5, 5, 20)
        assert rep.minimax is False
        assert rep.margins["a_plus_c"] == 0.0

    def test_too_few_residual_dimensions(self):
        rep = check_hb1_conditions(0.1, 0.1, 1, 2, 20)
        assert rep.minimax is False
        assert rep.margins["dimension"] < 0.0

    def test_linear_constraint_binds(self):
        # Pushing a up while keeping a + c small trips only the linear
        # inequality: 58a alone exceeds 140 once a > 140/58.
        rep = check_hb1_conditions(3.0, 0.0, 5, 5, 20)
        assert rep.minimax is False
        assert rep.margins["a_plus_c"] > 0.0
        assert rep.margins["linear"] < 0.0

    def test_minimax_iff_all_margins_hold(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            a = float(rng.uniform(-0.5, 4.0))
            c = float(rng.uniform(-0.5, 12.0))
            p = int(rng.integers(1, 7))
            k = int(rng.integers(2, 6))
            n = int(rng.integers(5, 40))
            rep = check_hb1_conditions(a, c, p, k, n)
            expect = (
                rep.margins["dimension"] >= 0.0
                and rep.margins["a_plus_c"] > 0.0
                and rep.margins["linear"] >= 0.0
            )
            assert rep.minimax == expect


class TestHb2Conditions:
    def test_benchmark_constants_pass(self):
        rep = check_hb2_conditions(0.1, 0.1, 0.1, 5, 5, 20)
        assert rep.minimax is True
        assert rep.proper_prior is False  # c = 0.1 <= 1
        assert rep.margins["mean_shrink_lhs"] == approx(13.0)
        assert rep.margins["mean_shrink_rhs"] == approx(140.0)
        assert rep.margins["zero_shrink_lhs"] == approx(4.0)
        assert rep.margins["zero_shrink_rhs"] == approx(5.0)

    def test_margin_keys(self):
        rep = check_hb2_conditions(0.1, 0.1, 0.1, 5, 5, 20)
        assert set(rep.margins) == {
            "dimension", "a_plus_b_plus_c",
            "mean_shrink_linear", "mean_shrink_lhs", "mean_shrink_rhs",
            "zero_shrink_linear", "zero_shrink_lhs", "zero_shrink_rhs",
        }

    def test_proper_prior_needs_c_above_one(self):
        rep = check_hb2_conditions(0.1, 0.1, 1.5, 5, 5, 20)
        assert rep.proper_prior is True
        # Propriety does not buy minimaxity: the zero-shrink inequality
        # fails at this c.
        assert rep.minimax is False
        assert rep.margins["zero_shrink_linear"] < 0.0

    def test_four_dimensions_never_minimax(self):
        # At p = 4 the zero-shrink bound p(n-2)/2 - 2n is -4 for every n,
        # so no nonnegative hyperparameters can satisfy it.
        for n in (10, 20, 50, 200):
            for abc in ((0.0, 0.0, 0.0), (0.1, 0.1, 0.1), (1.0, 0.5, 0.2)):
                rep = check_hb2_conditions(*abc, 4, 5, n)
                assert rep.minimax is False
                assert rep.margins["zero_shrink_rhs"] == approx(-4.0)

    def test_large_b_fails_zero_shrink(self):
        rep = check_hb2_conditions(0.1, 10.0, 0.1, 5, 5, 40)
        assert rep.minimax is False
        assert rep.margins["zero_shrink_linear"] < 0.0

    def test_three_dimensions_with_two_groups(self):
        rep = check_hb2_conditions(0.1, 5.0, 0.1, 3, 2, 20)
        assert rep.minimax is False


class TestPrial:
    def test_published_table_entries(self):
        assert prial(25.0, 6.475) == approx(74.1)
        assert prial(25.0, 25.0) == 0.0
        assert prial(25.0, 27.9) == approx(-11.6)

    def test_vectorized(self):
        out = prial(25.0, np.array([6.475, 25.0, 27.9]))
        assert out == approx([74.1, 0.0, -11.6])

    def test_rejects_nonpositive_reference(self):
        with pytest.raises(ValueError, match="positive"):
            prial(0.0, 5.0)
        with pytest.raises(ValueError, match="positive"):
            prial(np.nan, 5.0)
