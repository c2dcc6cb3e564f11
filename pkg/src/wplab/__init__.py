"""Numerical laboratory for the model Weil-Petersson geometry near a boundary stratum."""
from ._jit import NUMBA_ENABLED
from .collar import (
    CollarParams,
    FitReport,
    asymptotic_fit,
    collar_expansion_error,
    collar_factor,
    wolpert_length,
    wp_pairing,
)
from .errors import (
    ConvergenceError,
    DegenerateCoordinateError,
    DomainError,
    NumericalError,
    UsageError,
    WPLabError,
)
from .experiments import (
    CornerParams,
    TwistProfile,
    corner_comparison,
    dehn_twist_norm,
    differential_inequality_check,
    nonrefraction_probe,
    perturbation_gap_fit,
)
from .geodesics import Polyline, Trajectory, connect, distance, midpoint, minimize_path, path_functionals, shoot
from .model_metric import (
    ChartPoint,
    ModelSpec,
    TangentVector,
    christoffel,
    coordinate_transform,
    gauss_curvature_block,
    metric_tensor,
)
from .npc import (
    IsometrySpec,
    SampledFunction,
    axis_construct,
    cat0_check,
    convexity_scan,
    displacement,
    harnack_verify,
)

__version__ = "0.1.0"
