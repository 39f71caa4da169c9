"""Coherent and covariance states of a charge in a step-field undulator."""

from .config import RunConfig, format_config, parse_config
from .errors import (
    AccuracyError,
    ConfigError,
    DomainError,
    OverflowBoundError,
    ResolutionError,
    StitchError,
    UndulatorError,
)
from .model import (
    CoherentStateParams,
    DriftEpsilon,
    LatticePlan,
    MagnetEpsilon,
    MomentState,
    PhysicalParams,
    RegionKind,
    RegionSpec,
    build_lattice,
    cyclotron_frequency,
)
from .propagators import mean_drift, mean_magnet, moments_drift, moments_magnet, sample
from .stitching import (
    PropagationRun,
    build_and_propagate,
    fix_C1,
    magnet_exit_time,
    stitch_drift_to_magnet,
    stitch_magnet_to_drift,
)
from .uncertainty import classify_minimization, heisenberg_product, schrodinger_functional

__all__ = [
    "AccuracyError", "ConfigError", "DomainError", "OverflowBoundError", "ResolutionError",
    "StitchError", "UndulatorError",
    "CoherentStateParams", "DriftEpsilon", "LatticePlan", "MagnetEpsilon", "MomentState",
    "PhysicalParams", "RegionKind", "RegionSpec", "build_lattice", "cyclotron_frequency",
    "mean_drift", "mean_magnet", "moments_drift", "moments_magnet", "sample",
    "PropagationRun", "build_and_propagate", "fix_C1", "magnet_exit_time",
    "stitch_drift_to_magnet", "stitch_magnet_to_drift",
    "classify_minimization", "heisenberg_product", "schrodinger_functional",
    "RunConfig", "format_config", "parse_config",
]
