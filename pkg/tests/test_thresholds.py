import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oncovirus import DomainError, GridSpec, InputError, NumericalError, Logistic, build_kernel
from oncovirus import thresholds
from oncovirus.kernel import age_ladder
from oncovirus.model import robin_laplacian, tridiag_dense
from oncovirus.thresholds import (
    lambda1_closed_form,
    lambda1_linear,
    principal_eigenpair,
    s1_delayed,
    scalar_steady_state,
    sigma1,
)
from oracles import dense_principal, transcendental_s1


def kernel_at(grid, d2, alpha, tau, dt=None):
    dt = dt or (tau / 32 if tau > 0 else 1.0)
    return build_kernel(grid, d2, alpha, age_ladder(tau, dt) if tau > 0 else [0.0])


def check_eigen(res, A=None):
    assert np.min(res.eigenfunction) > 0
    assert np.max(res.eigenfunction) == pytest.approx(1.0)
    assert res.residual < 1e-8
    if A is not None:
        psi = res.eigenfunction
        assert np.max(np.abs(A @ psi - res.value * psi)) < 1e-8


class TestSigma1:
    def test_constant_rate(self, grid129):
        res = sigma1(grid129, 0.1, 0.5)
        assert res.value == pytest.approx(0.5, abs=1e-10)
        np.testing.assert_allclose(res.eigenfunction, 1.0, atol=1e-8)
        check_eigen(res)

    def test_zero_rate(self, grid129):
        assert abs(sigma1(grid129, 0.1, 0.0).value) < 1e-10

    @pytest.mark.parametrize("d1", [0.0, 0.1, 1.0])
    @pytest.mark.parametrize("b", [-1.0, 0.5, 2.0])
    def test_equals_b_for_constant_rate(self, grid129, b, d1):
        assert abs(sigma1(grid129, d1, b).value - b) < 1e-6

    def test_varying_rate_matches_dense_solver(self):
        # compare on the refined grid itself; both see the same discrete operator
        g = GridSpec(math.pi, 129).refined(2)
        f0 = 0.5 + 0.3 * np.cos(g.x)
        A = 0.1 * tridiag_dense(*robin_laplacian(g, g.eta1)) + np.diag(f0)
        res = sigma1(g, 0.1, f0)
        check_eigen(res, A)
        assert abs(res.value - dense_principal(A)) < 1e-6

    def test_discretization_close_to_refined(self, grid129):
        vals = [sigma1(g, 0.1, 0.5 + 0.3 * np.cos(g.x)).value for g in (grid129, grid129.refined(2))]
        assert abs(vals[0] - vals[1]) < 1e-4

    def test_shift_method_matches_inverse(self, grid33):
        f0 = 0.5 + 0.3 * np.cos(grid33.x)
        a = sigma1(grid33, 0.1, f0, method="shift")
        b = sigma1(grid33, 0.1, f0)
        assert a.method == "shift" and b.method == "inverse"
        assert abs(a.value - b.value) < 1e-8
        check_eigen(a)

    def test_robin_lowers_threshold(self, grid33):
        assert sigma1(grid33, 0.5, 1.0, eta1=1.0).value < 1.0

    def test_nonconvergence_reports_residual(self, grid33, monkeypatch):
        monkeypatch.setattr(thresholds, "MAX_ITER", 3)
        with pytest.raises(NumericalError) as info:
            sigma1(grid33, 0.1, 0.5 + 0.3 * np.cos(grid33.x), method="shift")
        assert info.value.residual is not None and info.value.residual > 0

    def test_bad_inputs(self, grid33):
        with pytest.raises(InputError):
            sigma1(grid33, -1.0, 0.5)
        with pytest.raises(InputError):
            principal_eigenpair(np.eye(3), method="qr")


class TestLambda1:
    def test_homogeneous_equals_closed_form(self, grid129):
        alpha, beta, b, d, tau = 0.5, 4.0, 1.0, 1.0, 0.25
        K = kernel_at(grid129, 1.0, alpha, tau)
        res = lambda1_linear(grid129, 1.0, alpha, K, beta * b / d)
        assert abs(res.value - lambda1_closed_form(alpha, beta, b, d, tau)) < 1e-6
        check_eigen(res)

    def test_zero_weight_gives_decay_rate(self, grid129):
        K = kernel_at(grid129, 1.0, 0.7, 1.0)
        assert lambda1_linear(grid129, 1.0, 0.7, K, 0.0).value == pytest.approx(-0.7, abs=1e-9)

    def test_varying_weight_matches_dense_solver(self, grid129):
        alpha, beta, b, d, tau = 1.0, 2.0, 1.0, 1.0, 0.5
        K = kernel_at(grid129, 1.0, alpha, tau)
        weight = beta * (0.5 + 0.4 * np.cos(grid129.x)) * b / d
        A = (
            tridiag_dense(*robin_laplacian(grid129, grid129.eta2))
            - alpha * np.eye(129)
            + K.matrices[-1] * (grid129.weights * weight)[None, :]
        )
        res = lambda1_linear(grid129, 1.0, alpha, K, weight)
        check_eigen(res, A)
        assert abs(res.value - dense_principal(A)) < 1e-6

    def test_accepts_raw_matrix_and_rejects_mismatch(self, grid33):
        K = kernel_at(grid33, 1.0, 1.0, 0.5)
        a = lambda1_linear(grid33, 1.0, 1.0, K, 2.0).value
        b = lambda1_linear(grid33, 1.0, 1.0, np.asarray(K.matrices[-1]), 2.0).value
        assert a == b
        with pytest.raises(InputError):
            lambda1_linear(grid33, 1.0, 1.0, np.eye(5), 2.0)
        with pytest.raises(InputError):
            lambda1_linear(GridSpec(math.pi, 17), 1.0, 1.0, K, 2.0)
        with pytest.raises(InputError):
            lambda1_linear(grid33, 1.0, 1.0, K, -1.0)

    def test_shift_method(self, grid33):
        K = kernel_at(grid33, 1.0, 1.0, 0.5)
        w = 2.0 * (0.5 + 0.4 * np.cos(grid33.x))
        a = lambda1_linear(grid33, 1.0, 1.0, K, w, method="shift").value
        b = lambda1_linear(grid33, 1.0, 1.0, K, w).value
        assert abs(a - b) < 1e-8


class TestS1:
    def test_no_delay_equals_linear(self, grid33):
        K = kernel_at(grid33, 1.0, 1.0, 0.0)
        w = 1.5 + np.cos(grid33.x)
        assert s1_delayed(grid33, 1.0, 1.0, K, w, 0.0).value == lambda1_linear(grid33, 1.0, 1.0, K, w).value

    @pytest.mark.parametrize("beta,tau", [(4.0, 0.25), (0.3, 1.0), (2.0, 2.0), (1.0, 0.0625)])
    def test_homogeneous_matches_scalar_root(self, grid129, beta, tau):
        alpha, b, d = 0.5, 1.0, 1.0
        K = kernel_at(grid129, 1.0, alpha, tau)
        res = s1_delayed(grid129, 1.0, alpha, K, beta * b / d, tau)
        assert abs(res.value - transcendental_s1(alpha, beta, b, d, tau)) < 1e-8
        assert np.min(res.eigenfunction) > 0

    def test_solves_its_fixed_point(self, grid33):
        alpha = 0.5 + 0.3 * np.cos(grid33.x)
        K = build_kernel(grid33, 1.0, alpha, age_ladder(1.0, 0.125))
        w = 3.0 * (1 + 0.5 * np.sin(grid33.x))
        s = s1_delayed(grid33, 1.0, alpha, K, w, 1.0).value
        lam = lambda1_linear(grid33, 1.0, alpha, math.exp(-s * 1.0) * np.asarray(K.matrices[-1]), w).value
        assert abs(lam - s) < 1e-8

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.1, 3.0), st.floats(0.1, 4.0), st.floats(0.05, 2.0), st.floats(0.0, 0.9))
    def test_sign_matches_linear(self, alpha, beta, tau, amp):
        g = GridSpec(math.pi, 33)
        K = kernel_at(g, 1.0, alpha, tau, dt=tau / 4)
        w = beta * (1 + amp * np.cos(g.x))
        lam = lambda1_linear(g, 1.0, alpha, K, w).value
        if abs(lam) < 1e-4:
            return
        s = s1_delayed(g, 1.0, alpha, K, w, tau).value
        assert math.copysign(1, s) == math.copysign(1, lam)

    def test_negative_tau(self, grid33):
        with pytest.raises(InputError):
            s1_delayed(grid33, 1.0, 1.0, kernel_at(grid33, 1.0, 1.0, 0.5), 1.0, -0.5)


class TestClosedForm:
    def test_examples(self):
        assert lambda1_closed_form(1, 2, 1, 1, 0) == 1.0
        assert lambda1_closed_form(0.5, 1, 1, 2, 1) == pytest.approx(-0.196734670, abs=1e-9)
        beta = 0.8 * 1.3 * math.exp(0.8 * 0.7) / 2.0
        assert abs(lambda1_closed_form(0.8, beta, 2.0, 1.3, 0.7)) < 1e-14

    @pytest.mark.parametrize("d", [0.0, -1.0])
    def test_requires_positive_d(self, d):
        with pytest.raises(DomainError):
            lambda1_closed_form(1, 1, 1, d, 1)
        with pytest.raises(InputError):
            lambda1_closed_form(1, 1, 1, d, 1)

    @settings(max_examples=50)
    @given(st.floats(0.1, 3), st.floats(0.1, 5), st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0, 2))
    def test_monotone(self, alpha, beta, b, d, tau):
        f = lambda1_closed_form
        base = f(alpha, beta, b, d, tau)
        e = 1e-4
        assert f(alpha, beta + e, b, d, tau) > base
        assert f(alpha, beta, b + e, d, tau) > base
        assert f(alpha + e, beta, b, d, tau) < base
        assert f(alpha, beta, b, d, tau + e) < base


class TestScalarSteadyState:
    def test_logistic_neumann(self, grid33):
        z = scalar_steady_state(grid33, 0.1, Logistic(0.7, 2.0))
        np.testing.assert_allclose(z, 0.35, rtol=1e-8)

    def test_extinct(self, grid33):
        assert not scalar_steady_state(grid33, 0.1, Logistic(-0.5, 1.0)).any()

    def test_robin_profile_solves_equation(self, grid33):
        growth = Logistic(1.0, 1.0)
        z = scalar_steady_state(grid33, 0.5, growth, eta1=1.0)
        D = tridiag_dense(*robin_laplacian(grid33, (1.0, 1.0)))
        assert np.all(z > 0) and np.all(z < 1.0)
        assert np.max(np.abs(0.5 * D @ z + z * growth(z))) < 1e-7
