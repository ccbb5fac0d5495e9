"""Logarithm groups: G, its inverse F, the Lazard law and the group functionals.

A class is identified by its formal group exponential ``G(t) = ln_G(e^t)``:

=================  ===================================  ===============
class              G(t)                                 G'(0) + G''(0)
=================  ===================================  ===============
Boltzmann          t                                    1
Tsallis(q)         (e^{(1-q)t} - 1) / (1-q)             2 - q
Kaniadakis(q)      sinh((1-q)t) / (1-q)                 1
ABR(a, b)          (e^{at} - e^{bt}) / (a-b)            1 + a + b
=================  ===================================  ===============
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from . import _kernels
from .errors import DomainError, GroupRangeError
from .numerics import Estimate, QuadratureSpec, gauss_hermite_rule, integrate, refine_rule_sum

# |q - 1| below this is the Boltzmann class
Q_ONE_GUARD = 1e-12
MAX_SERIES_ORDER = 12
# integrand p G(ln(p/q)) is taken as zero below this density
LOG_TINY = math.log(1e-300)
# |G'(0) + G''(0)| below this counts as zero
PHI_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class GroupClass:
    """Base for the entropy classes.  Instances are immutable values."""

    name: ClassVar[str] = ""
    code: ClassVar[int] = -1

    @property
    def kernel_params(self) -> tuple[int, float, float]:
        raise NotImplementedError

    def d1_at_zero(self) -> float:
        raise NotImplementedError

    def d2_at_zero(self) -> float:
        raise NotImplementedError

    @property
    def phi(self) -> float:
        return self.d1_at_zero() + self.d2_at_zero()

    @property
    def phi_is_zero(self) -> bool:
        # a + b = -1 style parameters rarely sum to exactly zero in floating point
        return abs(self.phi) <= PHI_ZERO_TOL

    @property
    def phi_negative(self) -> bool:
        return self.phi < -PHI_ZERO_TOL

    def params(self) -> dict:
        return {}

    def label(self) -> str:
        p = ",".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{self.name}:{p}" if p else self.name

    def range_bounds(self) -> tuple[float, float]:
        """Open interval (lo, hi) that F accepts: the image of G's increasing branch through 0."""
        return (-math.inf, math.inf)

    def series_c(self, order: int) -> list[float]:
        """Taylor coefficients c_i of G'(t) = sum c_i t^i, i = 0..order."""
        raise NotImplementedError

    def _inverse(self, s: float) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"kind": self.name, **self.params(), "phi": self.phi}


@dataclass(frozen=True)
class Boltzmann(GroupClass):
    name: ClassVar[str] = "boltzmann"
    code: ClassVar[int] = 0

    @property
    def kernel_params(self):
        return (0, 0.0, 0.0)

    def d1_at_zero(self):
        return 1.0

    def d2_at_zero(self):
        return 0.0

    def series_c(self, order):
        return [1.0] + [0.0] * order

    def _inverse(self, s):
        return s


def _check_q(q: float, kind: str) -> float:
    q = float(q)
    if not math.isfinite(q):
        raise DomainError(f"{kind} index q must be finite, got {q}")
    if abs(q - 1.0) < Q_ONE_GUARD:
        raise DomainError(f"{kind} class requires q != 1; use the Boltzmann class for q = 1")
    return q


@dataclass(frozen=True)
class Tsallis(GroupClass):
    q: float
    name: ClassVar[str] = "tsallis"
    code: ClassVar[int] = 1

    def __post_init__(self):
        object.__setattr__(self, "q", _check_q(self.q, "Tsallis"))

    @property
    def eps(self) -> float:
        return 1.0 - self.q

    @property
    def kernel_params(self):
        return (1, self.eps, 0.0)

    def params(self):
        return {"q": self.q}

    def d1_at_zero(self):
        return 1.0

    def d2_at_zero(self):
        return self.eps

    def range_bounds(self):
        if self.eps > 0:
            return (-1.0 / self.eps, math.inf)
        return (-math.inf, -1.0 / self.eps)

    def series_c(self, order):
        return [self.eps**i / math.factorial(i) for i in range(order + 1)]

    def _inverse(self, s):
        e = self.eps
        x = e * s
        if abs(e) < 1e-6 and abs(x) < 1e-3:
            return s * (1.0 - x / 2.0 + x * x / 3.0 - x**3 / 4.0)
        return math.log1p(x) / e


@dataclass(frozen=True)
class Kaniadakis(GroupClass):
    q: float
    name: ClassVar[str] = "kaniadakis"
    code: ClassVar[int] = 2

    def __post_init__(self):
        object.__setattr__(self, "q", _check_q(self.q, "Kaniadakis"))

    @property
    def eps(self) -> float:
        return 1.0 - self.q

    @property
    def kernel_params(self):
        return (2, self.eps, 0.0)

    def params(self):
        return {"q": self.q}

    def d1_at_zero(self):
        return 1.0

    def d2_at_zero(self):
        return 0.0

    def series_c(self, order):
        e = self.eps
        return [e**i / math.factorial(i) if i % 2 == 0 else 0.0 for i in range(order + 1)]

    def _inverse(self, s):
        e = self.eps
        x = e * s
        if abs(e) < 1e-6 and abs(x) < 1e-3:
            x2 = x * x
            return s * (1.0 - x2 / 6.0 + 3.0 * x2**2 / 40.0 - 5.0 * x2**3 / 112.0)
        return math.asinh(x) / e


@dataclass(frozen=True)
class AbeBorgesRoditi(GroupClass):
    a: float
    b: float
    name: ClassVar[str] = "abr"
    code: ClassVar[int] = 3

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (math.isfinite(a) and math.isfinite(b)):
            raise DomainError("Abe-Borges-Roditi parameters must be finite")
        if a == b:
            raise DomainError(f"Abe-Borges-Roditi class requires a != b, got a = b = {a}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def kernel_params(self):
        return (3, self.a, self.b)

    def params(self):
        return {"a": self.a, "b": self.b}

    def d1_at_zero(self):
        return 1.0

    def d2_at_zero(self):
        return self.a + self.b

    def series_c(self, order):
        a, b = self.a, self.b
        return [(a ** (i + 1) - b ** (i + 1)) / ((a - b) * math.factorial(i)) for i in range(order + 1)]

    def critical_point(self) -> float | None:
        """Stationary point of G when a and b share a sign, else None."""
        a, b = self.a, self.b
        if a * b <= 0:
            return None
        with np.errstate(over="ignore", divide="ignore"):
            t_star = float(np.log(np.float64(b) / a) / (a - b))
        # a subnormal parameter pushes the stationary point past any finite t
        return t_star if math.isfinite(t_star) else None

    def range_bounds(self):
        a, b = self.a, self.b
        t_star = self.critical_point()
        if t_star is not None:
            g_star = float(eval_G(self, t_star))
            return (g_star, math.inf) if t_star < 0 else (-math.inf, g_star)
        lo, hi = min(a, b), max(a, b)
        lower = -math.inf if lo < 0 else -1.0 / hi
        upper = math.inf if hi > 0 else -1.0 / lo
        return (lower, upper)

    def _inverse(self, s):
        t_star = self.critical_point()
        lo_lim = t_star if (t_star is not None and t_star < 0) else -math.inf
        hi_lim = t_star if (t_star is not None and t_star > 0) else math.inf

        def g(t):
            return float(eval_G(self, t))

        # grow [-1, 1] geometrically, staying on the increasing branch
        lo = -1.0 if lo_lim < -1.0 else 0.5 * lo_lim
        hi = 1.0 if hi_lim > 1.0 else 0.5 * hi_lim
        for _ in range(2000):
            if g(lo) <= s:
                break
            lo = 2.0 * lo if lo_lim == -math.inf else 0.5 * (lo + lo_lim)
        for _ in range(2000):
            if g(hi) >= s:
                break
            hi = 2.0 * hi if hi_lim == math.inf else 0.5 * (hi + hi_lim)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if g(mid) < s:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(1.0, abs(mid)):
                break
        t = 0.5 * (lo + hi)
        for _ in range(3):
            slope = (self.a * math.exp(self.a * t) - self.b * math.exp(self.b * t)) / (self.a - self.b)
            if slope <= 0:
                break
            step = (g(t) - s) / slope
            if not lo - 1e-12 <= t - step <= hi + 1e-12:
                break
            t -= step
        return t


def parse_class(text: str) -> GroupClass:
    """Build a class from ``boltzmann``, ``tsallis:q=0.5``, ``kaniadakis:q=0.3`` or ``abr:a=0.2,b=0.3``."""
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    kwargs = {}
    if rest.strip():
        for item in rest.split(","):
            key, sep, val = item.partition("=")
            if not sep:
                raise DomainError(f"malformed class parameter {item!r} in {text!r}")
            try:
                kwargs[key.strip()] = float(val)
            except ValueError:
                raise DomainError(f"class parameter {key.strip()!r} is not a number: {val!r}") from None
    factories = {
        "boltzmann": (Boltzmann, set()),
        "tsallis": (Tsallis, {"q"}),
        "kaniadakis": (Kaniadakis, {"q"}),
        "abr": (AbeBorgesRoditi, {"a", "b"}),
    }
    if name not in factories:
        raise DomainError(f"unknown entropy class {name!r}; expected one of {sorted(factories)}")
    cls, keys = factories[name]
    if set(kwargs) != keys:
        raise DomainError(f"class {name!r} takes parameters {sorted(keys)}, got {sorted(kwargs)}")
    return cls(**kwargs)


# ---------------------------------------------------------------------------
# pointwise operations


def eval_G(cls: GroupClass, t):
    """G(t) for the class; scalar in, float out; arrays are evaluated elementwise."""
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("G is evaluated at finite t only")
    kind, p0, p1 = cls.kernel_params
    with np.errstate(over="ignore", invalid="ignore"):
        out = _kernels.group_eval(kind, p0, p1, arr)
    if not np.all(np.isfinite(out)):
        raise GroupRangeError(f"{cls.label()}: G(t) overflows for |t| up to {np.max(np.abs(arr)):.6g}")
    return float(out) if arr.ndim == 0 else out


def eval_F(cls: GroupClass, s) -> float:
    """Inverse of G on its increasing branch through the origin."""
    s = float(s)
    lo, hi = cls.range_bounds()
    if not math.isfinite(s):
        raise DomainError(f"{cls.label()}: F requires finite s, got {s}")
    if not lo < s:
        raise DomainError(f"{cls.label()}: F(s) requires s > {lo!r} (lower bound of the range of G), got {s!r}")
    if not s < hi:
        raise DomainError(f"{cls.label()}: F(s) requires s < {hi!r} (upper bound of the range of G), got {s!r}")
    return cls._inverse(s)


def phi_factor(cls: GroupClass) -> float:
    """G'(0) + G''(0) from the closed-form derivatives."""
    return cls.phi


def phi_factor_fd(cls: GroupClass, h: float = 1e-3) -> float:
    """G'(0) + G''(0) by fourth-order central differences of G."""
    g2, g1, g0, gm1, gm2 = (float(eval_G(cls, k * h)) for k in (2, 1, 0, -1, -2))
    d1 = (-g2 + 8.0 * g1 - 8.0 * gm1 + gm2) / (12.0 * h)
    d2 = (-g2 + 16.0 * g1 - 30.0 * g0 + 16.0 * gm1 - gm2) / (12.0 * h * h)
    return d1 + d2


def group_law(cls: GroupClass, x: float, y: float) -> float:
    """Lazard law Phi(x, y) = G(F(x) + F(y))."""
    return float(eval_G(cls, eval_F(cls, x) + eval_F(cls, y)))


def ln_G(cls: GroupClass, x: float) -> float:
    if not x > 0:
        raise DomainError(f"ln_G requires x > 0, got {x}")
    return float(eval_G(cls, math.log(x)))


def group_product(cls: GroupClass, x: float, y: float) -> float:
    """Generalized product with ln_G(x (x) y) = ln_G(x) + ln_G(y)."""
    if not (x > 0 and y > 0):
        raise DomainError(f"generalized product requires x, y > 0, got {x}, {y}")
    total = ln_G(cls, x) + ln_G(cls, y)
    t = eval_F(cls, total)
    try:
        return math.exp(t)
    except OverflowError:
        raise GroupRangeError(f"{cls.label()}: generalized product overflows") from None


# ---------------------------------------------------------------------------
# series


@dataclass(frozen=True)
class SeriesCoeffs:
    """Coefficients of G(t) = sum c_i t^{i+1}/(i+1) and F(s) = sum gamma_i s^{i+1}/(i+1)."""

    c: tuple[float, ...]
    gamma: tuple[float, ...]
    order: int


def _series_reversion(g: list[float]) -> list[float]:
    """Compositional inverse of a power series with g[0] = 0, g[1] = 1."""
    n = len(g) - 1
    f = [0.0] * (n + 1)
    f[1] = 1.0 / g[1]
    for k in range(2, n + 1):
        # [s^k] sum_j g_j F^j with f_1..f_{k-1} known; the f_k term enters via g_1 f_k
        power = [0.0] * (k + 1)
        power[0] = 1.0
        acc = 0.0
        for j in range(1, k + 1):
            nxt = [0.0] * (k + 1)
            for a in range(k + 1):
                if power[a] == 0.0:
                    continue
                for b in range(1, k + 1 - a):
                    nxt[a + b] += power[a] * f[b]
            power = nxt
            if j >= 2:
                acc += g[j] * power[k]
        f[k] = -acc / g[1]
    return f


def series_coeffs(cls: GroupClass, order: int = MAX_SERIES_ORDER) -> SeriesCoeffs:
    """Taylor coefficients of G and of its inverse F, indices 0..order."""
    if not 0 <= order <= MAX_SERIES_ORDER:
        raise DomainError(f"series order must be between 0 and {MAX_SERIES_ORDER}, got {order}")
    c = cls.series_c(order)
    g = [0.0] + [c[i] / (i + 1) for i in range(order + 1)]
    f = _series_reversion(g)
    gamma = [f[i + 1] * (i + 1) for i in range(order + 1)]
    return SeriesCoeffs(tuple(c), tuple(gamma), order)


def eval_series(coeffs, t: float) -> float:
    """sum coeffs[i] t^{i+1} / (i+1)."""
    return sum(ci * t ** (i + 1) / (i + 1) for i, ci in enumerate(coeffs))


# ---------------------------------------------------------------------------
# functionals


def _check_normalized(family, theta, quad):
    mass = family_integral(family, theta, lambda x, logp: np.exp(logp), quad)
    if abs(mass.value - 1.0) > max(quad.tolerance(1.0), mass.err_est) * 10:
        raise DomainError(f"{family.name}: density is not normalized at theta={list(theta)} (mass {mass.value!r})")


def family_integral(family, theta, integrand, quad: QuadratureSpec | None = None, frame=None) -> Estimate:
    """Integrate ``integrand(x, logp)`` over the sample space of ``family`` at ``theta``."""
    quad = quad or QuadratureSpec()
    center, L = frame if frame is not None else family.frame(theta)

    def f(x):
        return integrand(x, family.log_density(x, theta))

    return integrate(f, center, L, quad)


def _group_functional(cls, family, theta, t_of, quad, what):
    """Estimate of int p(x) G(t(x)) dx, with p < 1e-300 contributing zero."""
    quad = quad or QuadratureSpec()
    kind, p0, p1 = cls.kernel_params
    center, L = family.frame(theta)

    if quad.scheme == "gauss_hermite_tensor":

        def rule_sum(x, logw):
            logp = family.log_density(x, theta)
            t = t_of(x, logp)
            with np.errstate(over="ignore", invalid="ignore"):
                val = _kernels.weighted_group_sum(kind, p0, p1, logw, logp, t)
            if not math.isfinite(val):
                raise GroupRangeError(f"{cls.label()}: {what} integrand overflows")
            return val

        return refine_rule_sum(rule_sum, center, L, quad, what=what)

    def integrand(x, logp):
        t = t_of(x, logp)
        vals = np.exp(logp) * eval_G(cls, t)
        return np.where(logp < LOG_TINY, 0.0, vals)

    return family_integral(family, theta, integrand, quad)


def entropy_SG(cls: GroupClass, family, theta=None, quad: QuadratureSpec | None = None) -> Estimate:
    """Entropy group functional S_G(p) = int p G(-ln p)."""
    theta = family.resolve(theta)
    quad = quad or QuadratureSpec()
    _check_normalized(family, theta, quad)
    return _group_functional(cls, family, theta, lambda x, logp: -logp, quad, "entropy")


def divergence_DG(cls: GroupClass, p_family, p_theta, q_family=None, q_theta=None, quad=None) -> Estimate:
    """Relative entropy group D_G(p||q) = int p G(ln(p/q)).

    ``q_family`` defaults to ``p_family``.  Nodes follow the mass of p.
    """
    q_family = p_family if q_family is None else q_family
    p_theta = p_family.resolve(p_theta)
    q_theta = q_family.resolve(q_theta)
    if p_family.sample_dim != q_family.sample_dim:
        raise DomainError("divergence requires densities on the same sample space")

    def t_of(x, logp):
        logq = q_family.log_density(x, q_theta)
        bad = (logp >= LOG_TINY) & ~np.isfinite(logq)
        if np.any(bad):
            where = x[np.argmax(bad)]
            raise DomainError(f"divergence integrand diverges: q vanishes where p > 0, e.g. near x={where.tolist()}")
        return logp - logq

    return _group_functional(cls, p_family, p_theta, t_of, quad, "divergence")
