"""Fisher metric group toolkit."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (
    ConvergenceError,
    DomainError,
    GroupRangeError,
    NonFiniteSampleError,
    NotPositiveDefiniteError,
    TheoremInapplicableError,
)
from .group_core import (
    AbeBorgesRoditi,
    Boltzmann,
    GroupClass,
    Kaniadakis,
    Tsallis,
    divergence_DG,
    entropy_SG,
    eval_F,
    eval_G,
    group_law,
    group_product,
    ln_G,
    parse_class,
    phi_factor,
    phi_factor_fd,
    series_coeffs,
)
from .numerics import CURVATURE_FD, Estimate, FdSpec, MetricTensor, QuadratureSpec
from .stat_models import (
    Correlated2DParams,
    OscillatorEnsemble,
    ParametricFamily,
    correlated2d,
    gaussian1d,
    oscillator_to_2dc,
)
from .geometry import (
    christoffel,
    fisher_metric_expectation,
    fisher_metric_group_hessian,
    geometry_report,
    group_metric,
    ricci,
    scalar_curvature,
    verify_theorem,
)
from .analysis import cri_report, q_indices_from_T, q_indices_from_r, softening_limit_check, table1
