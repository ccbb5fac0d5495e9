"""Quadrature over R^n, finite differences and small symmetric linear algebra."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy import linalg
from scipy.special import roots_hermite

from .errors import ConvergenceError, NonFiniteSampleError, NotPositiveDefiniteError

EPS = np.finfo(float).eps

SCHEMES = ("gauss_hermite_tensor", "adaptive_box")
FD_SCHEMES = ("central_2nd_order", "central_4th_order")

# per-call node budget for tensor refinement
MAX_NODES = 2**21


class Estimate(NamedTuple):
    value: float
    err_est: float


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration settings.

    ``order`` is the number of Gauss-Hermite nodes per axis, ``box_halfwidth``
    the truncation radius (in standard deviations of the weight frame) used by
    the adaptive scheme.
    """

    scheme: str = "gauss_hermite_tensor"
    order: int = 64
    box_halfwidth: float = 12.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_order: int = 256

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown quadrature scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.scheme == "gauss_hermite_tensor" and self.order < 8:
            raise ValueError(f"tensor scheme needs order >= 8, got {self.order}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.box_halfwidth <= 0:
            raise ValueError("box_halfwidth must be positive")

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class FdSpec:
    """Finite-difference settings.

    With ``base_step=None`` the step is chosen per derivative order as
    ``eps**(1/(d+p))`` (d: derivative order, p: accuracy order), scaled by
    ``1 + |theta_k|``.
    """

    base_step: float | None = None
    scheme: str = "central_4th_order"
    richardson: bool = False

    def __post_init__(self):
        if self.scheme not in FD_SCHEMES:
            raise ValueError(f"unknown FD scheme {self.scheme!r}; expected one of {FD_SCHEMES}")
        if self.base_step is not None and not self.base_step > 0:
            raise ValueError("base_step must be positive")

    @property
    def accuracy(self) -> int:
        return 2 if self.scheme == "central_2nd_order" else 4

    def step(self, derivative_order: int) -> float:
        if self.base_step is not None:
            return self.base_step
        return EPS ** (1.0 / (derivative_order + self.accuracy))


# default for nested differentiation in curvature computations
CURVATURE_FD = FdSpec(base_step=2e-3, scheme="central_4th_order", richardson=True)


@dataclass(frozen=True)
class MetricTensor:
    """Symmetric positive-definite matrix attached to a parameter point.

    Construction symmetrizes ``g`` after checking it is symmetric to 1e-12
    (relative to its largest entry) and rejects it unless every eigenvalue
    exceeds ``1e-10 * trace``.  ``require_pd=False`` keeps non-PD matrices,
    recording ``positive_definite=False``.
    """

    theta: np.ndarray
    g: np.ndarray
    condition_estimate: float = field(init=False)
    positive_definite: bool = field(init=False)
    require_pd: bool = field(default=True, repr=False)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.g, dtype=float))
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"metric must be square, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NotPositiveDefiniteError("metric has non-finite entries")
        scale = max(np.max(np.abs(g)), np.finfo(float).tiny)
        asym = np.max(np.abs(g - g.T)) / scale
        if asym > 1e-12:
            raise ValueError(f"metric is not symmetric (relative asymmetry {asym:.3e})")
        g = 0.5 * (g + g.T)
        g.setflags(write=False)
        theta = np.asarray(self.theta, dtype=float).copy()
        theta.setflags(write=False)
        spectrum = np.linalg.eigvalsh(g)
        trace = float(np.trace(g))
        pd = bool(trace > 0 and spectrum[0] > 1e-10 * trace)
        if self.require_pd and not pd:
            raise NotPositiveDefiniteError(
                f"metric is not positive definite; spectrum={spectrum.tolist()}", spectrum
            )
        cond = float(spectrum[-1] / spectrum[0]) if spectrum[0] > 0 else float("inf")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "positive_definite", pd)
        object.__setattr__(self, "condition_estimate", cond)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    def inverse(self) -> np.ndarray:
        return spd_inverse(self.g)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "g": self.g.tolist(),
            "condition_estimate": self.condition_estimate,
            "positive_definite": self.positive_definite,
        }


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=64)
def _hermite_1d(order: int):
    z, w = roots_hermite(order)
    return z, np.log(w) + z * z


@lru_cache(maxsize=64)
def _hermite_tensor(order: int, n: int):
    z, logw = _hermite_1d(order)
    zz = np.array(list(itertools.product(z, repeat=n)), dtype=float).reshape(-1, n)
    lw = np.sum(np.array(list(itertools.product(logw, repeat=n)), dtype=float).reshape(-1, n), axis=1)
    zz.setflags(write=False)
    lw.setflags(write=False)
    return zz, lw


def frame_matrix(weight_scales, n: int) -> np.ndarray:
    """Per-axis scales or a lower-triangular factor, returned as an n x n matrix."""
    scales = np.asarray(weight_scales, dtype=float)
    if scales.ndim == 0:
        scales = np.full(n, float(scales))
    if scales.ndim == 1:
        if scales.shape != (n,):
            raise ValueError(f"expected {n} scales, got {scales.shape}")
        scales = np.diag(scales)
    if scales.shape != (n, n):
        raise ValueError(f"frame matrix must be {n}x{n}, got {scales.shape}")
    if abs(np.linalg.det(scales)) == 0:
        raise ValueError("degenerate quadrature frame")
    return scales


def gauss_hermite_rule(weight_center, weight_scales, order: int):
    """Nodes ``x`` (N, n) and log-weights with ``int f dx ~ sum exp(logw) f(x)``.

    Nodes are ``center + sqrt(2) L z`` so a Gaussian with covariance ``L L^T``
    centred at ``center`` is integrated exactly against polynomials.
    """
    center = np.atleast_1d(np.asarray(weight_center, dtype=float))
    n = center.shape[0]
    if not 1 <= n <= 4:
        raise ValueError(f"integration dimension must be between 1 and 4, got {n}")
    L = frame_matrix(weight_scales, n)
    z, lw = _hermite_tensor(int(order), n)
    x = center + np.sqrt(2.0) * z @ L.T
    logw = lw + 0.5 * n * np.log(2.0) + np.log(abs(np.linalg.det(L)))
    return x, logw


def refine_rule_sum(rule_sum: Callable, weight_center, weight_scales, spec: QuadratureSpec, what="integral"):
    """Run ``rule_sum(x, logw)`` at increasing Gauss-Hermite orders until converged.

    The error estimate is the difference between order N and N/2.  Returns an
    :class:`Estimate`; raises :class:`ConvergenceError` after ``max_order``.
    """
    n = np.atleast_1d(weight_center).shape[0]
    order = spec.order
    coarse = rule_sum(*gauss_hermite_rule(weight_center, weight_scales, max(order // 2, 4)))
    while True:
        fine = rule_sum(*gauss_hermite_rule(weight_center, weight_scales, order))
        err = abs(fine - coarse)
        if not np.isfinite(fine):
            raise ConvergenceError(f"{what}: non-finite quadrature sum at order {order}", fine, np.inf)
        if err <= spec.tolerance(fine):
            return Estimate(float(fine), float(err))
        nxt = 2 * order
        if nxt > spec.max_order or nxt**n > MAX_NODES:
            raise ConvergenceError(
                f"{what}: quadrature did not converge (err_est={err:.3e} at order {order})", fine, err
            )
        coarse, order = fine, nxt


def integrate(f: Callable, weight_center, weight_scales, spec: QuadratureSpec | None = None) -> Estimate:
    """Integrate a vectorized ``f: (N, n) -> (N,)`` over R^n.

    ``weight_center``/``weight_scales`` describe where the integrand's mass
    sits (per-axis scales or a Cholesky factor of a covariance).
    """
    spec = spec or QuadratureSpec()
    center = np.atleast_1d(np.asarray(weight_center, dtype=float))
    n = center.shape[0]

    if spec.scheme == "gauss_hermite_tensor":

        def rule_sum(x, logw):
            vals = np.asarray(f(x), dtype=float)
            return float(np.sum(np.exp(logw) * vals))

        return refine_rule_sum(rule_sum, center, weight_scales, spec)

    L = frame_matrix(weight_scales, n)
    jac = abs(np.linalg.det(L))
    w = spec.box_halfwidth

    def g(*z):
        x = center + L @ np.asarray(z)
        return float(np.asarray(f(x[None, :]), dtype=float)[0]) * jac

    opts = {"epsabs": spec.abs_tol, "epsrel": spec.rel_tol, "limit": 200}
    value, err = sp_integrate.nquad(g, [(-w, w)] * n, opts=[opts] * n)
    if err > spec.tolerance(value):
        raise ConvergenceError(f"adaptive quadrature did not converge (err_est={err:.3e})", value, err)
    return Estimate(float(value), float(err))


# ---------------------------------------------------------------------------
# finite differences


def _checked(f, point):
    val = np.asarray(f(point), dtype=float)
    if not np.all(np.isfinite(val)):
        raise NonFiniteSampleError(f"non-finite function value at stencil point {np.asarray(point).tolist()}", point)
    return val


def _steps(theta0, spec: FdSpec, derivative_order: int) -> np.ndarray:
    return spec.step(derivative_order) * (1.0 + np.abs(theta0))


def _extrapolate(estimate: Callable, h: np.ndarray, spec: FdSpec):
    """Apply the FD scheme (and optional Richardson step) to a 2nd-order ``estimate(h)``."""

    def schemed(hh):
        d1 = estimate(hh)
        if spec.scheme == "central_2nd_order":
            return d1
        return (4.0 * d1 - estimate(2.0 * hh)) / 3.0

    out = schemed(h)
    if spec.richardson:
        p = spec.accuracy
        out = (2.0**p * schemed(0.5 * h) - out) / (2.0**p - 1.0)
    return out


def jacobian_fd(f: Callable, theta0, spec: FdSpec | None = None) -> np.ndarray:
    """Central-difference derivative of an array-valued ``f``.

    Returns an array of shape ``f(theta0).shape + (m,)``; the last axis
    indexes the differentiation coordinate.
    """
    spec = spec or FdSpec()
    theta0 = np.asarray(theta0, dtype=float)
    m = theta0.shape[0]
    h0 = _steps(theta0, spec, 1)
    cols = []
    for k in range(m):
        e = np.zeros(m)
        e[k] = 1.0

        def estimate(h, e=e, k=k):
            hk = h[k]
            return (_checked(f, theta0 + hk * e) - _checked(f, theta0 - hk * e)) / (2.0 * hk)

        cols.append(_extrapolate(estimate, h0, spec))
    return np.stack(cols, axis=-1)


def hessian_fd(f: Callable, theta0, spec: FdSpec | None = None) -> np.ndarray:
    """Central-difference Hessian of a scalar function, symmetrized."""
    spec = spec or FdSpec()
    theta0 = np.asarray(theta0, dtype=float)
    m = theta0.shape[0]
    h0 = _steps(theta0, spec, 2)
    cache: dict = {}

    def fv(point):
        key = tuple(point.tolist())
        if key not in cache:
            cache[key] = float(_checked(f, point))
        return cache[key]

    H = np.zeros((m, m))
    f0 = fv(theta0)
    eye = np.eye(m)
    for j in range(m):
        for k in range(j, m):
            if j == k:

                def estimate(h, j=j):
                    hj = h[j]
                    return (fv(theta0 + hj * eye[j]) - 2.0 * f0 + fv(theta0 - hj * eye[j])) / hj**2

            else:

                def estimate(h, j=j, k=k):
                    a, b = h[j] * eye[j], h[k] * eye[k]
                    return (
                        fv(theta0 + a + b) - fv(theta0 + a - b) - fv(theta0 - a + b) + fv(theta0 - a - b)
                    ) / (4.0 * h[j] * h[k])

            H[j, k] = H[k, j] = _extrapolate(estimate, h0, spec)
    return 0.5 * (H + H.T)


def metric_field_derivatives(metric_field: Callable, theta, spec: FdSpec | None = None) -> np.ndarray:
    """Array ``dg[i, j, k] = d g_ij / d theta^k`` by central differences."""

    def as_array(t):
        g = metric_field(t)
        return g.g if isinstance(g, MetricTensor) else np.asarray(g, dtype=float)

    return jacobian_fd(as_array, theta, spec)


def spd_inverse(g) -> np.ndarray:
    """Inverse of a symmetric positive-definite matrix via Cholesky."""
    g = g.g if isinstance(g, MetricTensor) else np.asarray(g, dtype=float)
    try:
        factor = linalg.cho_factor(g, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite; spectrum={np.linalg.eigvalsh(g).tolist()}",
            np.linalg.eigvalsh(g),
        ) from exc
    inv = linalg.cho_solve(factor, np.eye(g.shape[0]))
    return 0.5 * (inv + inv.T)
