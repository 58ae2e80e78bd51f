"""Volterra rough path lifts (levels one and two) over fractional and standard
Brownian motion with singular kernels ``(tau - r)^-gamma``, plus tools to
check their algebraic and analytic properties numerically.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConvergenceError,
    DomainError,
    NumericalError,
    ParameterError,
    SingularEvaluation,
    VerificationError,
    VolterraError,
)
from .grid import Grid, TwoParamField, delta_increment, make_uniform_grid  # noqa: E402
from .regularity import FamilyAN, RegularityParams, psi1, psi12, validate_params  # noqa: E402
from .driver import (  # noqa: E402
    DriverSpec,
    PathSample,
    covariance,
    inner_product_H,
    level1_exact_covariance,
    sample_paths,
)
from .level1 import Level1Field, build_level1, level1_increment  # noqa: E402
from .convolution import ConvolutionResult, convolution_bound_ratio, convolve  # noqa: E402
from .level2 import (  # noqa: E402
    Level2Field,
    build_level2,
    chen_residual,
    ito_strat_divergence_probe,
    level2_increment,
    strat_correction,
)
from .analysis import (  # noqa: E402
    HolderReport,
    delta_norms,
    grr_check,
    grr_U1,
    grr_U12,
    volterra_norm1,
    volterra_norm12,
)
from .montecarlo import (  # noqa: E402
    MomentReport,
    MonteCarlo,
    ScalingReport,
    bound_ratio_surface,
    estimate_moment,
    scaling_exponent,
)
