"""SINR/STINR statistics of Poisson cellular networks and their Poisson-Dirichlet structure.

Closed forms (`closed_form`), exact samplers (`sampler`), quadrature
(`quadrature`), Monte Carlo comparisons (`validate`) and a command-line
front end (`cli`).
"""

__version__ = "0.1.0"

from .errors import (
    BudgetExceeded,
    DomainError,
    EmptyInput,
    EmptySample,
    InsufficientPoints,
    NotSupported,
    RangeError,
    TruncationWarning,
    WindowTooSmall,
)
from .model import (
    Direction,
    MomentQuery,
    NetworkParams,
    PDParams,
    PropagationSample,
    RatioSample,
    RatioScale,
    Scale,
    hat_transform,
    sinr_stinr_transform,
    unhat_transform,
    validate_network_params,
)
from .quadrature import QuadResult, QuadSpec, integrate_semi_infinite, integrate_simplex, integrate_unit_cube
from .sampler import FadingLaw, RngStream, TruncationPolicy

__all__ = [
    "__version__",
    "BudgetExceeded",
    "DomainError",
    "EmptyInput",
    "EmptySample",
    "InsufficientPoints",
    "NotSupported",
    "RangeError",
    "TruncationWarning",
    "WindowTooSmall",
    "Direction",
    "MomentQuery",
    "NetworkParams",
    "PDParams",
    "PropagationSample",
    "RatioSample",
    "RatioScale",
    "Scale",
    "hat_transform",
    "sinr_stinr_transform",
    "unhat_transform",
    "validate_network_params",
    "QuadResult",
    "QuadSpec",
    "integrate_semi_infinite",
    "integrate_simplex",
    "integrate_unit_cube",
    "FadingLaw",
    "RngStream",
    "TruncationPolicy",
]
