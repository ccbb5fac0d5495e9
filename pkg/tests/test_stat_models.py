import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from groupfisher import Correlated2DParams, DomainError, OscillatorEnsemble, correlated2d, gaussian1d, oscillator_to_2dc
from groupfisher.numerics import integrate
from groupfisher.stat_models import (
    affine_transform,
    canonical_marginal,
    make_family,
    product_family,
    t_ratio_from_r,
)


def test_gaussian1d_density_matches_scipy():
    fam = gaussian1d(0.4, 1.7)
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(fam.density(x), stats.norm(0.4, 1.7).pdf(x), rtol=1e-14)


@pytest.mark.parametrize("r", [0.0, 0.3, -0.6, 0.9])
def test_correlated2d_matches_scipy(r):
    fam = correlated2d(mu_x=0.5, sigma=1.3, r=r, Sigma=0.8)
    S2 = 0.8**2
    cov = [[1.3**2, -r * S2], [-r * S2, S2**2 / 1.3**2]]
    rng = np.random.default_rng(3)
    x = rng.normal(size=(50, 2))
    np.testing.assert_allclose(fam.density(x), stats.multivariate_normal([0.5, 0.0], cov).pdf(x), rtol=1e-12)


@pytest.mark.parametrize("fam", [gaussian1d(1.0, 0.3), correlated2d(mu_x=-1.0, sigma=2.0, r=0.7, Sigma=1.5)], ids=["g1", "c2"])
def test_normalized(fam):
    center, L = fam.frame()
    assert integrate(lambda x: fam.density(x), center, L).value == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("fam", [gaussian1d(0.2, 0.8), correlated2d(mu_x=0.1, sigma=1.2, r=0.5, Sigma=1.0)], ids=["g1", "c2"])
def test_analytic_score_matches_fd(fam):
    from dataclasses import replace

    x = np.random.default_rng(0).normal(size=(20, fam.sample_dim))
    fd_fam = replace(fam, score_fn=None)
    np.testing.assert_allclose(fam.score(x), fd_fam.score(x), rtol=1e-8, atol=1e-9)


@settings(max_examples=30)
@given(mu=st.floats(-3, 3), sigma=st.floats(0.2, 4))
def test_score_has_zero_mean(mu, sigma):
    fam = gaussian1d(mu, sigma)
    center, L = fam.frame()
    for k in range(2):
        val = integrate(lambda x: fam.density(x) * fam.score(x)[:, k], center, L).value
        assert abs(val) < 1e-10 / sigma


def test_x_score():
    fam = gaussian1d(0.5, 2.0)
    x = np.array([-1.0, 0.5, 3.0])
    np.testing.assert_allclose(fam.x_score(x), -(x - 0.5) / 4.0, rtol=1e-14)
    with pytest.raises(DomainError):
        correlated2d().x_score(np.zeros((1, 2)))


def test_domain_guards():
    with pytest.raises(DomainError):
        gaussian1d(0.0, 0.0)
    with pytest.raises(DomainError):
        gaussian1d(0.0, 1.0).log_density([0.0], [0.0, 1e-10])
    with pytest.raises(DomainError):
        correlated2d(r=1.0)
    with pytest.raises(DomainError):
        correlated2d(Sigma=0.0)
    with pytest.raises(DomainError):
        gaussian1d().check_theta([0.0, 1.0, 2.0])


def test_closed_form_metric_2dc():
    fam = correlated2d(sigma=2.0, r=0.6)
    np.testing.assert_allclose(fam.closed_form_metric().g, np.diag([0.25, 1.0]) / 0.64, rtol=1e-15)


def test_product_and_affine():
    a, b = gaussian1d(0.0, 1.0), gaussian1d(2.0, 0.5)
    prod = product_family(a, b)
    x = np.array([[0.3, 1.7], [-1.0, 2.2]])
    np.testing.assert_allclose(prod.log_density(x), a.log_density(x[:, :1]) + b.log_density(x[:, 1:]))
    assert prod.score(x).shape == (2, 4)
    aff = affine_transform(a, 3.0, 1.0)
    y = np.linspace(-4, 6, 9)
    np.testing.assert_allclose(aff.density(y), stats.norm(1.0, 3.0).pdf(y), rtol=1e-13)
    with pytest.raises(DomainError):
        affine_transform(a, 0.0, 1.0)


def test_make_family():
    fam = make_family("corr2d", {"mu": 1.0, "sigma": 2.0}, {"r": 0.6, "Sigma": 1.0})
    assert fam.describe() == {"name": "corr2d", "params": {"mu": 1.0, "sigma": 2.0}, "const": {"r": 0.6, "Sigma": 1.0}}
    with pytest.raises(DomainError):
        make_family("gauss1d", {"mu": 0.0}, {"r": 0.5})
    with pytest.raises(DomainError):
        make_family("cauchy", {}, {})


def test_oscillator_validation():
    with pytest.raises(DomainError):
        OscillatorEnsemble(T=2.0, T0=1.0)
    with pytest.raises(DomainError):
        OscillatorEnsemble(m1=-1.0)


@settings(max_examples=25, deadline=None)
@given(
    m1=st.floats(0.2, 5), m2=st.floats(0.2, 5), w1=st.floats(0.2, 5), w2=st.floats(0.2, 5),
    x10=st.floats(-2, 2), x20=st.floats(-2, 2), t=st.floats(0.05, 1.0),
)
def test_oscillator_marginal_is_correlated_model(m1, m2, w1, w2, x10, x20, t):
    ens = OscillatorEnsemble(m1, m2, w1, w2, x10, x20, T=0.7 * t, T0=0.7)
    fam = correlated2d(oscillator_to_2dc(ens))
    cov = ens.T * np.linalg.inv(ens.stiffness())
    pts = np.random.default_rng(1).multivariate_normal([x10, x20], cov, size=15)
    exact = stats.multivariate_normal([x10, x20], cov).pdf(pts)
    np.testing.assert_allclose(fam.density(np.c_[pts[:, 0], pts[:, 1] - x20]), exact, rtol=1e-9)
    assert t_ratio_from_r(oscillator_to_2dc(ens).r) == pytest.approx(ens.t_ratio, abs=1e-12)


def test_canonical_marginal_normalized():
    ens = OscillatorEnsemble(1.0, 2.0, 1.5, 0.5, 0.3, -0.1, T=0.3, T0=1.0)
    g = np.linspace(-2, 2, 5)
    X1, X2 = np.meshgrid(g + 0.3, g - 0.1)
    cov = ens.T * np.linalg.inv(ens.stiffness())
    exact = stats.multivariate_normal([0.3, -0.1], cov).pdf(np.c_[X1.ravel(), X2.ravel()])
    np.testing.assert_allclose(canonical_marginal(ens, X1.ravel(), X2.ravel()), exact, rtol=1e-10)


def test_coupling_sign():
    ens = OscillatorEnsemble(T=0.36, T0=1.0)
    assert ens.coupling == pytest.approx(-0.8)
    assert oscillator_to_2dc(ens).r == pytest.approx(0.8)
    with pytest.raises(DomainError):
        t_ratio_from_r(1.0)
