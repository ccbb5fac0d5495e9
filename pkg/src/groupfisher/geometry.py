"""Fisher metrics (expectation and divergence-Hessian estimators), the group
metric, Christoffel symbols, Ricci tensor, scalar curvature, and a numerical
check that a group metric is a constant multiple of the Boltzmann one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from . import _kernels
from .errors import DomainError, NotPositiveDefiniteError, TheoremInapplicableError
from .group_core import Boltzmann, GroupClass, divergence_DG
from .numerics import (
    CURVATURE_FD,
    FdSpec,
    MetricTensor,
    QuadratureSpec,
    hessian_fd,
    jacobian_fd,
    metric_field_derivatives,
    refine_rule_sum,
    spd_inverse,
)

METRIC_RTOL = 1e-4
CHRISTOFFEL_ATOL = 1e-6
RICCI_RTOL = 1e-4
CURVATURE_RTOL = 1e-3
# curvature paths integrate more finely than the defaults
CURVATURE_MIN_ORDER = 64


def fisher_metric_expectation(family, theta=None, quad: QuadratureSpec | None = None) -> MetricTensor:
    """<d_j ln p d_k ln p> under p(.; theta), by quadrature."""
    theta = family.resolve(theta)
    quad = quad or QuadratureSpec()
    center, L = family.frame(theta)
    m = family.param_dim
    iu = np.triu_indices(m)

    def rule_sum(x, logw):
        logp = family.log_density(x, theta)
        s = family.score(x, theta)
        return _kernels.weighted_outer_sum(logw + logp, s)

    # refine on a scalar summary, then keep the matrix of the accepted order
    state = {}

    def scalar(x, logw):
        g = rule_sum(x, logw)
        state[len(logw)] = g
        return float(np.sum(np.abs(g[iu])))

    if quad.scheme == "gauss_hermite_tensor":
        refine_rule_sum(scalar, center, L, quad, what="Fisher metric")
        g = state[max(state)]
    else:
        from .group_core import family_integral

        g = np.zeros((m, m))
        for j, k in zip(*iu):

            def integrand(x, logp, j=j, k=k):
                s = family.score(x, theta)
                return np.exp(logp) * s[:, j] * s[:, k]

            g[j, k] = g[k, j] = family_integral(family, theta, integrand, quad).value
    return MetricTensor(theta, g)


def _require_phi(cls: GroupClass, what: str) -> float:
    phi = cls.phi
    if cls.phi_is_zero:
        raise TheoremInapplicableError(f"{cls.label()}: G'(0)+G''(0) = 0, the {what} is degenerate")
    return phi


def fisher_metric_group_hessian(
    cls: GroupClass, family, theta=None, fd: FdSpec | None = None, quad: QuadratureSpec | None = None
) -> MetricTensor:
    """Hessian at theta of theta' -> D_G(p(theta') || p(theta)).

    For classes with G'(0)+G''(0) < 0 the result is returned with
    ``positive_definite=False``.
    """
    theta = family.resolve(theta)
    phi = _require_phi(cls, "group metric")
    fd = fd or FdSpec()
    quad = quad or QuadratureSpec()

    def A(th):
        return divergence_DG(cls, family, th, family, theta, quad).value

    H = hessian_fd(A, theta, fd)
    return MetricTensor(theta, H, require_pd=not cls.phi_negative)


def group_metric(cls: GroupClass, family, theta=None, quad: QuadratureSpec | None = None) -> MetricTensor:
    """(G'(0)+G''(0)) times the expectation metric."""
    phi = cls.phi
    if cls.phi_is_zero or cls.phi_negative:
        raise DomainError(
            f"{cls.label()}: G'(0)+G''(0) = {phi!r} <= 0 gives no Riemannian metric; "
            "use fisher_metric_group_hessian to inspect the Hessian"
        )
    base = fisher_metric_expectation(family, theta, quad)
    return MetricTensor(base.theta, phi * base.g)


# ---------------------------------------------------------------------------
# metric fields and curvature


def _as_array(g) -> np.ndarray:
    return g.g if isinstance(g, MetricTensor) else np.asarray(g, dtype=float)


def cached_field(metric_field: Callable) -> Callable:
    """Memoize a metric field on exact parameter values (stencils revisit points)."""

    @lru_cache(maxsize=4096)
    def cached(key):
        g = _as_array(metric_field(np.array(key)))
        g.setflags(write=False)
        return g

    return lambda theta: cached(tuple(float(t) for t in np.asarray(theta, dtype=float)))


def boltzmann_field(family, quad: QuadratureSpec | None = None) -> Callable:
    """Closed-form metric field when the family has one, else the expectation estimator."""
    if family.closed_form_metric_fn is not None:
        return lambda th: family.closed_form_metric_fn(np.asarray(th, dtype=float))
    quad = _curvature_quad(quad)
    return lambda th: fisher_metric_expectation(family, th, quad).g


def group_field(
    cls: GroupClass, family, estimator: str = "expectation", fd: FdSpec | None = None, quad=None
) -> Callable:
    """Metric field of a class, by ``"expectation"`` (phi times score quadrature) or ``"hessian"``."""
    quad = _curvature_quad(quad)
    if estimator == "expectation":
        return lambda th: group_metric(cls, family, th, quad).g
    if estimator == "hessian":
        return lambda th: fisher_metric_group_hessian(cls, family, th, fd, quad).g
    raise ValueError(f"unknown estimator {estimator!r}")


def _curvature_quad(quad):
    quad = quad or QuadratureSpec()
    if quad.scheme == "gauss_hermite_tensor" and quad.order < CURVATURE_MIN_ORDER:
        from dataclasses import replace

        quad = replace(quad, order=CURVATURE_MIN_ORDER)
    return quad


def christoffel(metric_field: Callable, theta, fd: FdSpec | None = None) -> np.ndarray:
    """Second-kind symbols ``gamma[i, k, l] = 1/2 g^{im} (g_mk,l + g_ml,k - g_kl,m)``."""
    fd = fd or CURVATURE_FD
    theta = np.asarray(theta, dtype=float)
    g = _as_array(metric_field(theta))
    ginv = spd_inverse(g)
    dg = metric_field_derivatives(metric_field, theta, fd)  # dg[i, j, k] = d_k g_ij
    first_kind = 0.5 * (dg + np.transpose(dg, (0, 2, 1)) - np.transpose(dg, (2, 1, 0)))
    # first_kind[m, k, l] = 1/2 (g_mk,l + g_ml,k - g_kl,m)
    gamma = np.einsum("im,mkl->ikl", ginv, first_kind)
    return 0.5 * (gamma + np.transpose(gamma, (0, 2, 1)))


def ricci(metric_field: Callable, theta, fd: FdSpec | None = None) -> np.ndarray:
    """R_ij = Gamma^l_ij,l - Gamma^l_il,j + Gamma^m_ij Gamma^l_lm - Gamma^m_il Gamma^l_jm."""
    fd = fd or CURVATURE_FD
    field = cached_field(metric_field)
    theta = np.asarray(theta, dtype=float)
    gamma = christoffel(field, theta, fd)
    dgamma = jacobian_fd(lambda t: christoffel(field, t, fd), theta, fd)  # dgamma[i,k,l,d] = d_d Gamma^i_kl
    term1 = np.einsum("lijl->ij", dgamma)
    term2 = np.einsum("lilj->ij", dgamma)
    term3 = np.einsum("mij,llm->ij", gamma, gamma)
    term4 = np.einsum("mil,ljm->ij", gamma, gamma)
    R = term1 - term2 + term3 - term4
    return 0.5 * (R + R.T)


def scalar_curvature(metric_field: Callable, theta, fd: FdSpec | None = None) -> float:
    """R = g^{ij} R_ij."""
    theta = np.asarray(theta, dtype=float)
    ginv = spd_inverse(_as_array(metric_field(theta)))
    return float(np.einsum("ij,ij->", ginv, ricci(metric_field, theta, fd)))


@dataclass
class GeometryReport:
    theta: np.ndarray
    metric: MetricTensor
    christoffel: np.ndarray
    ricci: np.ndarray
    scalar_curvature: float
    class_used: GroupClass
    numeric_diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "theta": np.asarray(self.theta).tolist(),
            "metric": self.metric.to_dict(),
            "christoffel": self.christoffel.tolist(),
            "ricci": self.ricci.tolist(),
            "scalar_curvature": self.scalar_curvature,
            "class_used": self.class_used.to_dict(),
            "numeric_diagnostics": self.numeric_diagnostics,
        }


def geometry_report(
    cls: GroupClass,
    family,
    theta=None,
    fd: FdSpec | None = None,
    quad: QuadratureSpec | None = None,
    estimator: str = "expectation",
) -> GeometryReport:
    """Metric, Christoffel symbols, Ricci tensor and scalar curvature of a class at theta.

    With ``estimator="expectation"`` and the Boltzmann class the family's
    closed-form metric is used when it has one.
    """
    theta = family.resolve(theta)
    fd = fd or CURVATURE_FD
    quad = _curvature_quad(quad)
    if isinstance(cls, Boltzmann) and estimator == "expectation":
        field_fn = boltzmann_field(family, quad)
        source = "closed_form" if family.closed_form_metric_fn is not None else "expectation"
    else:
        field_fn = group_field(cls, family, estimator, None, quad)
        source = estimator
    field_fn = cached_field(field_fn)
    g = MetricTensor(theta, field_fn(theta))
    gamma = christoffel(field_fn, theta, fd)
    R_ij = ricci(field_fn, theta, fd)
    R = float(np.einsum("ij,ij->", spd_inverse(g.g), R_ij))
    diag = {
        "metric_source": source,
        "fd_step": fd.base_step,
        "fd_scheme": fd.scheme,
        "fd_richardson": fd.richardson,
        "quad_order": quad.order,
        "quad_scheme": quad.scheme,
    }
    return GeometryReport(theta, g, gamma, R_ij, R, cls, diag)


# ---------------------------------------------------------------------------
# proportionality check


@dataclass
class TheoremReport:
    """Deviations of a class's geometry from (phi g_B, Gamma_B, R_ij B, R_B / phi)."""

    phi: float
    metric_ratio_error: float
    christoffel_max_diff: float
    ricci_max_diff: float
    curvature_scaling_error: float
    curvature_boltzmann: float
    curvature_group: float
    metric_pass: bool
    christoffel_pass: bool
    ricci_pass: bool
    curvature_pass: bool
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.metric_pass and self.christoffel_pass and self.ricci_pass and self.curvature_pass

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "metric_ratio_error": self.metric_ratio_error,
            "christoffel_max_diff": self.christoffel_max_diff,
            "ricci_max_diff": self.ricci_max_diff,
            "curvature_scaling_error": self.curvature_scaling_error,
            "curvature_boltzmann": self.curvature_boltzmann,
            "curvature_group": self.curvature_group,
            "pass": {
                "metric": self.metric_pass,
                "christoffel": self.christoffel_pass,
                "ricci": self.ricci_pass,
                "curvature": self.curvature_pass,
                "all": self.passed,
            },
            "tolerances": self.tolerances,
        }


def verify_theorem(
    cls: GroupClass,
    family,
    theta=None,
    fd: FdSpec | None = None,
    quad: QuadratureSpec | None = None,
    group_estimator: str = "hessian",
) -> TheoremReport:
    """Compare the geometry of ``cls`` with the Boltzmann geometry scaled by phi.

    The Boltzmann side uses the closed-form metric (or the expectation
    estimator); the group side uses ``group_estimator`` - by default the
    Hessian of the relative entropy group, which never sees phi.
    """
    theta = family.resolve(theta)
    phi = cls.phi
    if cls.phi_is_zero:
        raise TheoremInapplicableError(f"{cls.label()}: G'(0)+G''(0) = 0, the proportionality result does not apply")
    if cls.phi_negative:
        raise DomainError(f"{cls.label()}: G'(0)+G''(0) = {phi!r} < 0 gives an indefinite metric; curvature checks need phi > 0")
    fd = fd or CURVATURE_FD
    quad = _curvature_quad(quad)

    base = cached_field(boltzmann_field(family, quad))
    grp = cached_field(group_field(cls, family, group_estimator, None, quad))

    g_b = base(theta)
    g_g = grp(theta)
    metric_err = float(np.max(np.abs(g_g - phi * g_b)) / np.max(np.abs(phi * g_b)))

    gam_b = christoffel(base, theta, fd)
    gam_g = christoffel(grp, theta, fd)
    ric_b = ricci(base, theta, fd)
    ric_g = ricci(grp, theta, fd)
    R_b = float(np.einsum("ij,ij->", spd_inverse(g_b), ric_b))
    R_g = float(np.einsum("ij,ij->", spd_inverse(g_g), ric_g))

    gam_diff = float(np.max(np.abs(gam_g - gam_b)))
    ric_scale = max(float(np.max(np.abs(ric_b))), 1e-300)
    ric_diff = float(np.max(np.abs(ric_g - ric_b)))
    target = R_b / phi
    curv_err = abs(R_g - target) / abs(target) if target != 0 else abs(R_g)

    return TheoremReport(
        phi=phi,
        metric_ratio_error=metric_err,
        christoffel_max_diff=gam_diff,
        ricci_max_diff=ric_diff,
        curvature_scaling_error=float(curv_err),
        curvature_boltzmann=R_b,
        curvature_group=R_g,
        metric_pass=metric_err <= METRIC_RTOL,
        christoffel_pass=gam_diff <= CHRISTOFFEL_ATOL,
        ricci_pass=ric_diff <= RICCI_RTOL * ric_scale,
        curvature_pass=curv_err <= CURVATURE_RTOL,
        tolerances={
            "metric_rel": METRIC_RTOL,
            "christoffel_abs": CHRISTOFFEL_ATOL,
            "ricci_rel": RICCI_RTOL,
            "curvature_rel": CURVATURE_RTOL,
            "group_estimator": group_estimator,
        },
    )
