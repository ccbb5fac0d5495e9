"""Parametric families used throughout: 1D Gaussian, the 2D correlated model,
products and affine images of families, and the oscillator canonical ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import DomainError
from .numerics import MetricTensor

# distance from an open parameter-domain edge that is still rejected
EDGE_GUARD = 1e-9


@dataclass(frozen=True)
class ParametricFamily:
    """A density ``p(x; theta)`` on R^n with parameters in an open box of R^m.

    ``log_density(x, theta)`` and ``score(x, theta)`` are vectorized over the
    rows of ``x`` (shape (N, n)); ``score`` returns (N, m).  ``frame(theta)``
    gives the mean and a Cholesky factor of the covariance, used to place
    quadrature nodes.  ``theta`` is the point the family was built at and is
    the default wherever a parameter point is optional.
    """

    name: str
    sample_dim: int
    param_names: tuple[str, ...]
    param_domain: tuple[tuple[float, float], ...]
    log_density_fn: Callable
    frame_fn: Callable
    theta: np.ndarray
    score_fn: Callable | None = None
    x_score_fn: Callable | None = None
    closed_form_metric_fn: Callable | None = None
    fixed_constants: dict = field(default_factory=dict)

    @property
    def param_dim(self) -> int:
        return len(self.param_names)

    def check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape != (self.param_dim,):
            raise DomainError(f"{self.name}: expected {self.param_dim} parameters, got {theta.shape[0]}")
        for name, val, (lo, hi) in zip(self.param_names, theta, self.param_domain):
            if not (np.isfinite(val) and lo + EDGE_GUARD < val < hi - EDGE_GUARD):
                raise DomainError(f"{self.name}: parameter {name}={val!r} outside open domain ({lo}, {hi})")
        return theta

    def resolve(self, theta=None) -> np.ndarray:
        return self.check_theta(self.theta if theta is None else theta)

    def log_density(self, x, theta=None) -> np.ndarray:
        theta = self.resolve(theta)
        x = np.asarray(x, dtype=float).reshape(-1, self.sample_dim)
        return self.log_density_fn(x, theta)

    def density(self, x, theta=None) -> np.ndarray:
        return np.exp(self.log_density(x, theta))

    def score(self, x, theta=None) -> np.ndarray:
        """d ln p / d theta, analytic when available, else 4th-order central differences."""
        theta = self.resolve(theta)
        x = np.asarray(x, dtype=float).reshape(-1, self.sample_dim)
        if self.score_fn is not None:
            return self.score_fn(x, theta)
        cols = []
        for k in range(self.param_dim):
            h = 1e-3 * (1.0 + abs(theta[k]))
            e = np.zeros(self.param_dim)
            e[k] = h
            f = [self.log_density_fn(x, theta + j * e) for j in (2, 1, -1, -2)]
            cols.append((-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * h))
        return np.stack(cols, axis=1)

    def x_score(self, x, theta=None) -> np.ndarray:
        """d ln p / dx for one-dimensional sample spaces."""
        if self.sample_dim != 1:
            raise DomainError(f"{self.name}: x-score is defined for 1D sample spaces only")
        theta = self.resolve(theta)
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        if self.x_score_fn is not None:
            return self.x_score_fn(x, theta)
        h = 1e-4 * (1.0 + np.abs(x))
        f = [self.log_density_fn(x + j * h, theta) for j in (2, 1, -1, -2)]
        return (-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * h[:, 0])

    def frame(self, theta=None):
        theta = self.resolve(theta)
        center, L = self.frame_fn(theta)
        return np.atleast_1d(np.asarray(center, dtype=float)), np.atleast_2d(np.asarray(L, dtype=float))

    def closed_form_metric(self, theta=None) -> MetricTensor | None:
        if self.closed_form_metric_fn is None:
            return None
        theta = self.resolve(theta)
        return MetricTensor(theta, self.closed_form_metric_fn(theta))

    def at(self, theta) -> "ParametricFamily":
        """Same family with a different default point."""
        from dataclasses import replace

        return replace(self, theta=self.check_theta(theta))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "params": dict(zip(self.param_names, self.theta.tolist())),
            "const": dict(self.fixed_constants),
        }


# ---------------------------------------------------------------------------
# 1D Gaussian

_LOG_2PI = math.log(2.0 * math.pi)


def _g1_logpdf(x, theta):
    mu, sigma = theta
    u = x[:, 0] - mu
    return -0.5 * _LOG_2PI - math.log(sigma) - 0.5 * u * u / sigma**2


def _g1_score(x, theta):
    mu, sigma = theta
    u = x[:, 0] - mu
    return np.stack([u / sigma**2, -1.0 / sigma + u * u / sigma**3], axis=1)


def _g1_x_score(x, theta):
    mu, sigma = theta
    return -(x[:, 0] - mu) / sigma**2


def gaussian1d(mu: float = 0.0, sigma: float = 1.0) -> ParametricFamily:
    """Normal family N(mu, sigma^2) on R with parameters (mu, sigma)."""
    if not sigma > 0:
        raise DomainError(f"gaussian1d requires sigma > 0, got {sigma}")
    fam = ParametricFamily(
        name="gauss1d",
        sample_dim=1,
        param_names=("mu", "sigma"),
        param_domain=((-math.inf, math.inf), (0.0, math.inf)),
        log_density_fn=_g1_logpdf,
        frame_fn=lambda th: ([th[0]], [[th[1]]]),
        theta=np.array([mu, sigma], dtype=float),
        score_fn=_g1_score,
        x_score_fn=_g1_x_score,
        closed_form_metric_fn=lambda th: np.diag([1.0 / th[1] ** 2, 2.0 / th[1] ** 2]),
    )
    fam.check_theta(fam.theta)
    return fam


# ---------------------------------------------------------------------------
# 2D correlated model


@dataclass(frozen=True)
class Correlated2DParams:
    mu_x: float = 0.0
    sigma: float = 1.0
    r: float = 0.0
    Sigma: float = 1.0

    def __post_init__(self):
        if not abs(self.r) < 1.0 - EDGE_GUARD:
            raise DomainError(f"correlation r must satisfy |r| < 1, got {self.r}")
        if not self.sigma > EDGE_GUARD:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.Sigma > 0:
            raise DomainError(f"Sigma must be positive, got {self.Sigma}")


def closed_form_metric_2dc(params: Correlated2DParams) -> MetricTensor:
    """Boltzmann Fisher metric of the correlated model, diag(1/s^2, 4/s^2) / (1 - r^2)."""
    s2 = params.sigma**2
    g = np.diag([1.0 / s2, 4.0 / s2]) / (1.0 - params.r**2)
    return MetricTensor(np.array([params.mu_x, params.sigma]), g)


def correlated2d(params: Correlated2DParams | None = None, **kwargs) -> ParametricFamily:
    """Bivariate Gaussian with macrospace (mu_x, sigma) and constants r, Sigma.

    The exponent is ``-[u^2/s^2 + y^2 s^2/S^4 + 2 r u y/S^2] / (2(1-r^2))``
    with ``u = x - mu_x``; the normalization does not depend on sigma.
    """
    params = params if params is not None else Correlated2DParams(**kwargs)
    r, S = params.r, params.Sigma
    S2 = S * S
    one_m = 1.0 - r * r
    log_norm = -(math.log(2.0 * math.pi * S2) + 0.5 * math.log(one_m))

    def logpdf(x, theta):
        mu, sigma = theta
        u = x[:, 0] - mu
        y = x[:, 1]
        quad = u * u / sigma**2 + y * y * sigma**2 / S2**2 + 2.0 * r * u * y / S2
        return log_norm - quad / (2.0 * one_m)

    def score(x, theta):
        mu, sigma = theta
        u = x[:, 0] - mu
        y = x[:, 1]
        d_mu = (u / sigma**2 + r * y / S2) / one_m
        d_sigma = (u * u / sigma**3 - y * y * sigma / S2**2) / one_m
        return np.stack([d_mu, d_sigma], axis=1)

    def frame(theta):
        mu, sigma = theta
        cov = np.array([[sigma**2, -r * S2], [-r * S2, S2**2 / sigma**2]])
        return [mu, 0.0], linalg.cholesky(cov, lower=True)

    def metric(theta):
        sigma = theta[1]
        return np.diag([1.0 / sigma**2, 4.0 / sigma**2]) / one_m

    return ParametricFamily(
        name="corr2d",
        sample_dim=2,
        param_names=("mu", "sigma"),
        param_domain=((-math.inf, math.inf), (0.0, math.inf)),
        log_density_fn=logpdf,
        frame_fn=frame,
        theta=np.array([params.mu_x, params.sigma], dtype=float),
        score_fn=score,
        closed_form_metric_fn=metric,
        fixed_constants={"r": r, "Sigma": S},
    )


# ---------------------------------------------------------------------------
# combinators


def product_family(first: ParametricFamily, second: ParametricFamily) -> ParametricFamily:
    """Independent product p1(x1; th1) p2(x2; th2) with theta = (th1, th2)."""
    n1, m1 = first.sample_dim, first.param_dim

    def logpdf(x, theta):
        return first.log_density_fn(x[:, :n1], theta[:m1]) + second.log_density_fn(x[:, n1:], theta[m1:])

    def score(x, theta):
        return np.hstack([first.score(x[:, :n1], theta[:m1]), second.score(x[:, n1:], theta[m1:])])

    def frame(theta):
        c1, L1 = first.frame(theta[:m1])
        c2, L2 = second.frame(theta[m1:])
        return np.concatenate([c1, c2]), linalg.block_diag(L1, L2)

    return ParametricFamily(
        name=f"{first.name}*{second.name}",
        sample_dim=n1 + second.sample_dim,
        param_names=tuple(f"{n}_1" for n in first.param_names) + tuple(f"{n}_2" for n in second.param_names),
        param_domain=first.param_domain + second.param_domain,
        log_density_fn=logpdf,
        frame_fn=frame,
        theta=np.concatenate([first.theta, second.theta]),
        score_fn=score,
    )


def affine_transform(family: ParametricFamily, scale: float, shift: float) -> ParametricFamily:
    """Law of ``scale * X + shift`` for X ~ family (every axis transformed alike)."""
    if scale == 0:
        raise DomainError("affine transform needs a nonzero scale")
    n = family.sample_dim
    log_jac = n * math.log(abs(scale))

    def logpdf(x, theta):
        return family.log_density_fn((x - shift) / scale, theta) - log_jac

    def frame(theta):
        c, L = family.frame(theta)
        return scale * c + shift, abs(scale) * L

    return ParametricFamily(
        name=f"affine({family.name})",
        sample_dim=n,
        param_names=family.param_names,
        param_domain=family.param_domain,
        log_density_fn=logpdf,
        frame_fn=frame,
        theta=family.theta,
        fixed_constants=dict(family.fixed_constants),
    )


# ---------------------------------------------------------------------------
# interacting oscillators


@dataclass(frozen=True)
class OscillatorEnsemble:
    """Two coupled harmonic oscillators in contact with a bath at temperature T.

    Code units have k_B = 1.  The coupling coefficient of the potential is
    fixed by the temperature ratio through ``1 - r^2 = T/T0``.
    """

    m1: float = 1.0
    m2: float = 1.0
    omega1: float = 1.0
    omega2: float = 1.0
    x10: float = 0.0
    x20: float = 0.0
    T: float = 1.0
    T0: float = 1.0

    def __post_init__(self):
        for name in ("m1", "m2", "omega1", "omega2", "T", "T0"):
            if not getattr(self, name) > 0:
                raise DomainError(f"oscillator ensemble requires {name} > 0, got {getattr(self, name)}")
        if self.T > self.T0:
            raise DomainError(f"bath temperature T={self.T} exceeds reference T0={self.T0}; r would be imaginary")

    @property
    def t_ratio(self) -> float:
        return self.T / self.T0

    @property
    def coupling(self) -> float:
        """Coefficient of the interaction term -c sqrt(m1 m2) w1 w2 (x1-x10)(x2-x20).

        Negative (repulsive) so that the mapped correlated model has r >= 0.
        """
        return -math.sqrt(1.0 - self.t_ratio)

    def potential(self, x1, x2):
        u = np.asarray(x1, dtype=float) - self.x10
        v = np.asarray(x2, dtype=float) - self.x20
        k12 = self.coupling * math.sqrt(self.m1 * self.m2) * self.omega1 * self.omega2
        return (
            0.5 * self.m1 * self.omega1**2 * u * u
            + 0.5 * self.m2 * self.omega2**2 * v * v
            - k12 * u * v
        )

    def stiffness(self) -> np.ndarray:
        """Hessian of the potential in (x1, x2)."""
        k12 = self.coupling * math.sqrt(self.m1 * self.m2) * self.omega1 * self.omega2
        return np.array([[self.m1 * self.omega1**2, -k12], [-k12, self.m2 * self.omega2**2]])


def oscillator_to_2dc(ens: OscillatorEnsemble) -> Correlated2DParams:
    """Correlated-model parameters whose density equals the position marginal of the ensemble.

    mu_x = x10, sigma^2 = T0/(m1 w1^2), Sigma^2 = T0/(sqrt(m1 m2) w1 w2),
    r = sqrt(1 - T/T0); the y axis is ``x2 - x20``.
    """
    sigma = math.sqrt(ens.T0 / (ens.m1 * ens.omega1**2))
    Sigma = math.sqrt(ens.T0 / (math.sqrt(ens.m1 * ens.m2) * ens.omega1 * ens.omega2))
    r = math.sqrt(1.0 - ens.t_ratio)
    return Correlated2DParams(mu_x=ens.x10, sigma=sigma, r=r, Sigma=Sigma)


def t_ratio_from_r(r: float) -> float:
    """Inverse of the temperature mapping, T/T0 = 1 - r^2."""
    if not abs(r) < 1:
        raise DomainError(f"|r| must be < 1, got {r}")
    return 1.0 - r * r


def canonical_marginal(ens: OscillatorEnsemble, x1, x2, quad=None) -> np.ndarray:
    """Normalized exp(-V/T) at the given positions; the normalization is integrated numerically."""
    from .numerics import QuadratureSpec, integrate

    quad = quad or QuadratureSpec()
    beta = 1.0 / ens.T
    cov = ens.T * np.linalg.inv(ens.stiffness())
    L = linalg.cholesky(cov, lower=True)
    center = [ens.x10, ens.x20]
    z = integrate(lambda x: np.exp(-beta * ens.potential(x[:, 0], x[:, 1])), center, L, quad)
    return np.exp(-beta * ens.potential(x1, x2)) / z.value


def make_family(name: str, params: dict, const: dict | None = None) -> ParametricFamily:
    """Build a family from its CLI name, e.g. ``("corr2d", {"mu": 0, "sigma": 1}, {"r": 0.6, "Sigma": 1})``."""
    const = dict(const or {})
    params = dict(params)
    if name == "gauss1d":
        _expect_keys(name, params, {"mu", "sigma"}, const, set())
        return gaussian1d(params.get("mu", 0.0), params.get("sigma", 1.0))
    if name == "corr2d":
        _expect_keys(name, params, {"mu", "sigma"}, const, {"r", "Sigma"})
        return correlated2d(
            Correlated2DParams(
                mu_x=params.get("mu", 0.0),
                sigma=params.get("sigma", 1.0),
                r=const.get("r", 0.0),
                Sigma=const.get("Sigma", 1.0),
            )
        )
    raise DomainError(f"unknown model {name!r}; expected 'gauss1d' or 'corr2d'")


def _expect_keys(name, params, pkeys, const, ckeys):
    if not set(params) <= pkeys:
        raise DomainError(f"model {name!r} takes parameters {sorted(pkeys)}, got {sorted(params)}")
    if not set(const) <= ckeys:
        raise DomainError(f"model {name!r} takes constants {sorted(ckeys)}, got {sorted(const)}")
