import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupfisher import ConvergenceError, FdSpec, MetricTensor, NonFiniteSampleError, NotPositiveDefiniteError, QuadratureSpec
from groupfisher.numerics import gauss_hermite_rule, hessian_fd, integrate, jacobian_fd, metric_field_derivatives, spd_inverse


def gaussian_pdf(x, mean, cov):
    cov = np.atleast_2d(cov)
    d = x - mean
    sol = np.linalg.solve(cov, d.T).T
    return np.exp(-0.5 * np.sum(d * sol, axis=1)) / math.sqrt((2 * math.pi) ** len(mean) * np.linalg.det(cov))


def test_hermite_rule_moments():
    x, logw = gauss_hermite_rule([0.0], [1.0], 16)
    w = np.exp(logw) * gaussian_pdf(x, np.zeros(1), [[1.0]])
    for k, moment in [(0, 1.0), (2, 1.0), (4, 3.0), (6, 15.0), (3, 0.0)]:
        assert np.sum(w * x[:, 0] ** k) == pytest.approx(moment, abs=1e-12)


def test_integrate_correlated_gaussian():
    cov = np.array([[2.0, -0.6], [-0.6, 0.5]])
    mean = np.array([0.3, -1.0])
    L = np.linalg.cholesky(cov)
    est = integrate(lambda x: gaussian_pdf(x, mean, cov) * (x[:, 0] - mean[0]) * (x[:, 1] - mean[1]), mean, L)
    assert est.value == pytest.approx(-0.6, rel=1e-12)
    assert est.err_est < 1e-10


def test_integrate_accepts_per_axis_scales():
    est = integrate(lambda x: np.exp(-0.5 * ((x[:, 0] / 3.0) ** 2 + (x[:, 1] / 0.2) ** 2)), [0.0, 0.0], [3.0, 0.2])
    assert est.value == pytest.approx(2 * math.pi * 0.6, rel=1e-12)


def test_adaptive_box_agrees_with_tensor():
    f = lambda x: np.exp(-0.5 * x[:, 0] ** 2) * np.cos(x[:, 0])
    exact = math.sqrt(2 * math.pi) * math.exp(-0.5)
    gh = integrate(f, [0.0], [1.0])
    box = integrate(f, [0.0], [1.0], QuadratureSpec(scheme="adaptive_box"))
    assert gh.value == pytest.approx(exact, rel=1e-12)
    assert box.value == pytest.approx(exact, rel=1e-9)


def test_quadrature_non_convergence():
    with pytest.raises(ConvergenceError) as info:
        integrate(lambda x: np.abs(x[:, 0]), [0.0], [1.0], QuadratureSpec(order=8, max_order=16))
    assert info.value.err_est > 0


@pytest.mark.parametrize("kw", [{"scheme": "monte_carlo"}, {"order": 4}, {"rel_tol": 0.0}, {"box_halfwidth": -1.0}])
def test_quadrature_spec_validation(kw):
    with pytest.raises(ValueError):
        QuadratureSpec(**kw)


def test_fd_spec_steps():
    assert FdSpec().step(2) == pytest.approx(np.finfo(float).eps ** (1 / 6))
    assert FdSpec(scheme="central_2nd_order").step(1) == pytest.approx(np.finfo(float).eps ** (1 / 3))
    assert FdSpec(base_step=1e-3).step(2) == 1e-3
    with pytest.raises(ValueError):
        FdSpec(base_step=0.0)
    with pytest.raises(ValueError):
        FdSpec(scheme="forward")


@settings(max_examples=30)
@given(
    coeffs=st.lists(st.floats(-3, 3), min_size=6, max_size=6),
    theta=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
)
def test_hessian_of_quadratic(coeffs, theta):
    a, b, c, d, e, f0 = coeffs
    A = np.array([[2 * a, b], [b, 2 * c]])
    fn = lambda t: a * t[0] ** 2 + b * t[0] * t[1] + c * t[1] ** 2 + d * t[0] + e * t[1] + f0
    H = hessian_fd(fn, theta)
    assert np.max(np.abs(H - A)) < 1e-9 * max(1.0, np.max(np.abs(A)))


def test_hessian_of_smooth_function():
    fn = lambda t: math.exp(t[0]) * math.sin(t[1]) + t[0] ** 2 * t[1] ** 3
    t = np.array([0.3, 0.7])
    exact = np.array(
        [
            [math.exp(t[0]) * math.sin(t[1]) + 2 * t[1] ** 3, math.exp(t[0]) * math.cos(t[1]) + 6 * t[0] * t[1] ** 2],
            [math.exp(t[0]) * math.cos(t[1]) + 6 * t[0] * t[1] ** 2, -math.exp(t[0]) * math.sin(t[1]) + 6 * t[0] ** 2 * t[1]],
        ]
    )
    err2 = np.max(np.abs(hessian_fd(fn, t, FdSpec(base_step=1e-2, scheme="central_2nd_order")) - exact))
    err4 = np.max(np.abs(hessian_fd(fn, t, FdSpec(base_step=1e-2)) - exact))
    err6 = np.max(np.abs(hessian_fd(fn, t, FdSpec(base_step=1e-2, richardson=True)) - exact))
    assert err4 < err2 / 100
    assert err6 < err4
    assert np.max(np.abs(hessian_fd(fn, t) - exact)) < 1e-8


def test_jacobian_shape_and_values():
    fn = lambda t: np.array([[t[0] * t[1], math.sin(t[0])], [t[1] ** 2, 1.0]])
    J = jacobian_fd(fn, [0.5, -1.2])
    assert J.shape == (2, 2, 2)
    np.testing.assert_allclose(J[0, 0], [-1.2, 0.5], atol=1e-10)
    np.testing.assert_allclose(J[0, 1], [math.cos(0.5), 0.0], atol=1e-10)
    np.testing.assert_allclose(J[1, 0], [0.0, -2.4], atol=1e-10)


def test_metric_field_derivatives():
    field = lambda t: np.diag([1 / t[1] ** 2, 2 / t[1] ** 2])
    dg = metric_field_derivatives(field, [0.0, 1.5])
    np.testing.assert_allclose(dg[:, :, 1], np.diag([-2 / 1.5**3, -4 / 1.5**3]), rtol=1e-9)
    np.testing.assert_allclose(dg[:, :, 0], 0.0, atol=1e-12)


def test_non_finite_stencil_point():
    with pytest.raises(NonFiniteSampleError):
        hessian_fd(lambda t: math.log(t[0]) if t[0] > 0 else math.nan, [1e-9])


def test_metric_tensor_checks():
    m = MetricTensor([0.0], [[2.0, 0.5], [0.5, 1.0]])
    assert m.positive_definite
    np.testing.assert_allclose(m.inverse() @ m.g, np.eye(2), atol=1e-14)
    with pytest.raises(ValueError):
        MetricTensor([0.0], [[1.0, 0.2], [0.3, 1.0]])
    with pytest.raises(NotPositiveDefiniteError) as info:
        MetricTensor([0.0], [[1.0, 2.0], [2.0, 1.0]])
    assert info.value.spectrum[0] < 0
    soft = MetricTensor([0.0], [[1.0, 2.0], [2.0, 1.0]], require_pd=False)
    assert not soft.positive_definite
    with pytest.raises(NotPositiveDefiniteError):
        MetricTensor([0.0], [[1.0, np.nan], [np.nan, 1.0]])


def test_metric_tensor_is_read_only():
    m = MetricTensor([1.0, 2.0], np.eye(2))
    with pytest.raises(ValueError):
        m.g[0, 0] = 5.0


@given(st.lists(st.floats(0.1, 10), min_size=3, max_size=3), st.floats(-0.9, 0.9))
def test_spd_inverse(diag, rho):
    d = np.sqrt(diag)
    C = np.array([[1, rho, 0], [rho, 1, 0], [0, 0, 1]])
    g = d[:, None] * C * d[None, :]
    np.testing.assert_allclose(spd_inverse(g) @ g, np.eye(3), atol=1e-8)


def test_spd_inverse_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        spd_inverse(np.array([[1.0, 0.0], [0.0, -1.0]]))
