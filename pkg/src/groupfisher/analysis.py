"""Generalized Cramer-Rao bound, Fisher-Rao complexity, and the Tsallis indices
that map the correlated model onto the uncorrelated one and back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import fisher_metric_expectation, group_field, group_metric, scalar_curvature
from .group_core import Boltzmann, GroupClass, Tsallis, family_integral
from .numerics import CURVATURE_FD, FdSpec, QuadratureSpec
from .stat_models import Correlated2DParams, correlated2d

CRI_TOL = 1e-6
TABLE1_RATIOS = (0.0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 0.5, 0.75, 0.9, 1.0)


def fisher_information_x(family, theta=None, quad: QuadratureSpec | None = None) -> float:
    """Translation Fisher information <(d ln p / dx)^2> of a 1D family."""
    theta = family.resolve(theta)
    if family.sample_dim != 1:
        raise DomainError(f"{family.name}: Fisher information in x needs a 1D sample space")
    return family_integral(family, theta, lambda x, logp: np.exp(logp) * family.x_score(x, theta) ** 2, quad).value


def variance_x(family, theta=None, quad: QuadratureSpec | None = None) -> float:
    theta = family.resolve(theta)
    mean = family_integral(family, theta, lambda x, logp: np.exp(logp) * x[:, 0], quad).value
    return family_integral(family, theta, lambda x, logp: np.exp(logp) * (x[:, 0] - mean) ** 2, quad).value


@dataclass(frozen=True)
class CriReport:
    variance: float
    fisher_info: float
    group_fisher_info: float
    complexity: float
    group_complexity: float
    bound: float
    satisfied: bool
    phi: float

    def to_dict(self) -> dict:
        return {
            "variance": self.variance,
            "fisher_info": self.fisher_info,
            "group_fisher_info": self.group_fisher_info,
            "complexity": self.complexity,
            "group_complexity": self.group_complexity,
            "bound": self.bound,
            "satisfied": self.satisfied,
            "phi": self.phi,
        }


def _cri_precondition(cls: GroupClass) -> str:
    if cls.name == "tsallis":
        return "Tsallis class requires q <= 2"
    if cls.name == "abr":
        return "Abe-Borges-Roditi class requires a + b >= -1"
    return "requires G'(0)+G''(0) >= 0"


def cri_report(cls: GroupClass, family, theta=None, quad: QuadratureSpec | None = None, tol: float = CRI_TOL) -> CriReport:
    """Variance times (group) Fisher information, against its lower bound phi."""
    phi = cls.phi
    if cls.phi_negative:
        raise DomainError(f"{cls.label()}: G'(0)+G''(0) = {phi!r} < 0; the generalized bound {_cri_precondition(cls)}")
    var = variance_x(family, theta, quad)
    info = fisher_information_x(family, theta, quad)
    complexity = var * info
    g_info = phi * info
    g_complexity = var * g_info
    return CriReport(
        variance=var,
        fisher_info=info,
        group_fisher_info=g_info,
        complexity=complexity,
        group_complexity=g_complexity,
        bound=phi,
        satisfied=g_complexity >= phi - tol * max(phi, 1.0),
        phi=phi,
    )


# ---------------------------------------------------------------------------
# softening / strengthening indices


@dataclass(frozen=True)
class IndexPair:
    q_soft: float
    q_str: float
    source: str
    value: float

    def to_dict(self) -> dict:
        return {"q_soft": self.q_soft, "q_str": self.q_str, "source": self.source, "value": self.value}


def q_indices_from_r(r: float) -> IndexPair:
    """q_soft = 1 + r^2, q_str = (1 - 2 r^2)/(1 - r^2)."""
    r = float(r)
    if not abs(r) < 1:
        raise DomainError(f"|r| must be < 1 (q_str has a pole at |r| = 1), got r={r}")
    r2 = r * r
    return IndexPair(1.0 + r2, (1.0 - 2.0 * r2) / (1.0 - r2), "r", r)


def q_indices_from_T(t_ratio: float) -> IndexPair:
    """q_soft = 2 - T/T0, q_str = 2 - T0/T."""
    t = float(t_ratio)
    if not t > 0:
        raise DomainError(f"T/T0 must be > 0 (q_str diverges at T = 0), got {t}")
    if t > 1:
        raise DomainError(f"T/T0 must be <= 1, got {t}")
    return IndexPair(2.0 - t, 2.0 - 1.0 / t, "t_ratio", t)


def tsallis_or_boltzmann(q: float) -> GroupClass:
    """Tsallis(q), or Boltzmann when q is 1 to within the class guard."""
    return Boltzmann() if abs(q - 1.0) < 1e-12 else Tsallis(q)


@dataclass
class SofteningReport:
    r: float
    q_soft: float
    q_str: float
    softened_metric: np.ndarray
    uncorrelated_metric: np.ndarray
    strengthened_metric: np.ndarray
    correlated_metric: np.ndarray
    softened_curvature: float
    uncorrelated_curvature: float
    strengthened_curvature: float
    correlated_curvature: float
    metric_softening_error: float
    metric_strengthening_error: float
    curvature_softening_error: float
    curvature_strengthening_error: float
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        t = self.tolerances
        return (
            self.metric_softening_error <= t["metric_rel"]
            and self.metric_strengthening_error <= t["metric_rel"]
            and self.curvature_softening_error <= t["curvature_abs"]
            and self.curvature_strengthening_error <= t["curvature_abs"]
        )

    def to_dict(self) -> dict:
        out = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}
        out["pass"] = self.passed
        return out


def softening_limit_check(
    r: float,
    sigma: float = 1.0,
    Sigma: float = 1.0,
    quad: QuadratureSpec | None = None,
    fd: FdSpec | None = None,
) -> SofteningReport:
    """Tsallis metric of the correlated model at q_soft against the Boltzmann
    uncorrelated metric, and the uncorrelated model at q_str against the
    Boltzmann correlated one; curvatures likewise.
    """
    idx = q_indices_from_r(r)
    fd = fd or CURVATURE_FD
    theta = np.array([0.0, sigma])
    corr = correlated2d(Correlated2DParams(0.0, sigma, r, Sigma))
    unc = correlated2d(Correlated2DParams(0.0, sigma, 0.0, Sigma))
    soft_cls = tsallis_or_boltzmann(idx.q_soft)
    str_cls = tsallis_or_boltzmann(idx.q_str)

    g_soft = group_metric(soft_cls, corr, theta, quad).g
    g_unc = fisher_metric_expectation(unc, theta, quad).g
    g_str = group_metric(str_cls, unc, theta, quad).g
    g_corr = fisher_metric_expectation(corr, theta, quad).g

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))

    R_soft = scalar_curvature(group_field(soft_cls, corr, "expectation", quad=quad), theta, fd)
    R_unc = scalar_curvature(group_field(Boltzmann(), unc, "expectation", quad=quad), theta, fd)
    R_str = scalar_curvature(group_field(str_cls, unc, "expectation", quad=quad), theta, fd)
    R_corr = scalar_curvature(group_field(Boltzmann(), corr, "expectation", quad=quad), theta, fd)

    return SofteningReport(
        r=float(r),
        q_soft=idx.q_soft,
        q_str=idx.q_str,
        softened_metric=g_soft,
        uncorrelated_metric=g_unc,
        strengthened_metric=g_str,
        correlated_metric=g_corr,
        softened_curvature=R_soft,
        uncorrelated_curvature=R_unc,
        strengthened_curvature=R_str,
        correlated_curvature=R_corr,
        metric_softening_error=rel(g_soft, g_unc),
        metric_strengthening_error=rel(g_str, g_corr),
        curvature_softening_error=abs(R_soft - R_unc),
        curvature_strengthening_error=abs(R_str - R_corr),
        tolerances={"metric_rel": 1e-6, "curvature_abs": 1e-3},
    )


# ---------------------------------------------------------------------------
# Table 1


@dataclass(frozen=True)
class Table1Row:
    t_ratio: float
    q_soft: float
    q_str: float
    limit: bool = False

    def to_dict(self) -> dict:
        return {"t_ratio": self.t_ratio, "q_soft": self.q_soft, "q_str": self.q_str, "limit": self.limit}


def table1(t_ratios=TABLE1_RATIOS) -> list[Table1Row]:
    """Rows (T/T0, q_soft, q_str); T/T0 = 0 is the limit row (2, -inf)."""
    rows = []
    for t in t_ratios:
        t = float(t)
        if t == 0.0:
            rows.append(Table1Row(0.0, 2.0, -math.inf, limit=True))
            continue
        idx = q_indices_from_T(t)
        rows.append(Table1Row(t, idx.q_soft, idx.q_str))
    return rows


def paper_number(value: float) -> str:
    """Render as the published table does.

    Terminating decimals (up to 6 places) print in shortest form; repeating
    ones are truncated to 4 places (0.6666..., not 0.6667).
    """
    if math.isinf(value):
        return "-inf" if value < 0 else "inf"
    rounded = round(value, 6)
    if abs(value - rounded) <= 1e-9 * max(1.0, abs(value)):
        text = f"{rounded:.6f}".rstrip("0").rstrip(".")
        return "0" if text in ("-0", "") else text
    truncated = math.trunc(value * 1e4) / 1e4
    return f"{truncated:.4f}"


def ratio_label(value: float) -> str:
    if value == 0:
        return "0"
    if value < 1e-1 and math.isclose(10 ** round(math.log10(value)), value, rel_tol=1e-12):
        return f"1e-{-round(math.log10(value)):d}"
    return paper_number(value)
