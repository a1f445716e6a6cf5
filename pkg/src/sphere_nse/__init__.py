"""Divergence-free kernel collocation for the Navier-Stokes equations on the sphere."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BlowUpError, ConfigError, DomainError, FormatError, IllConditionedError, StateError,
    UnsupportedDegreeError, UnsupportedDerivativeError,
)
from .fields import KernelExpansion, NodalField, discrete_l2_norm  # noqa: E402
from .geometry import PointSet, generate_points, load_points, save_points  # noqa: E402
from .harmonics import (  # noqa: E402
    HarmonicIndex, curl_free_harmonic, div_free_harmonic, scalar_harmonic,
)
from .interpolation import (  # noqa: E402
    Collocation, assemble, curl_project, interpolate, leray_project, ritz_project,
)
from .kernels import ZonalKernel, matrix_kernel, parse_kernel_spec  # noqa: E402
from .pde import (  # noqa: E402
    BenchmarkForcing, ManufacturedProblem, NSEOperators, PhysicalParams, convection,
    coriolis, discrete_rhs,
)
from .timestepping import SchemeConfig, init_state, run  # noqa: E402
