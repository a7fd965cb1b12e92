"""Packing measure of self-similar sets under strong separation.

The discrete maximization runs over nested point grids ``A_k`` of the
attractor, reports every maximizing ball, tracks their stability across
generations and certifies lower bounds by cylinder classification.
"""

from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import (ConfigError, GapEstimationError, ResourceCapError, TruncationError,
                     UndefinedDensityError, ValidationError)
from .families import FamilySpec, OracleValue, build, oracle, verify_gasket_inequality
from .generation import (DistanceRecord, GapEstimate, GenerationState, LabeledPoint, Neighborhood,
                         estimate_gap, exact_gap, initial_points, next_generation, update_gap)
from .ifs import (IFSSystem, Similitude, apply, compose, diameter_check, fixed_point,
                  similarity_dimension)
from .measure import (DiscreteMeasure, MeasureBounds, certify_equality, h_k, mu_ball_bounds,
                      mu_k_ball, mu_weight)
from .packing import CandidateBall, GenerationResult, RunTrace, lower_bound, run, scan_center, window

__all__ = [
    "CandidateBall", "ConfigError", "DEFAULT_TOLERANCES", "DiscreteMeasure", "DistanceRecord",
    "FamilySpec", "GapEstimate", "GapEstimationError", "GenerationResult", "GenerationState",
    "IFSSystem", "LabeledPoint", "MeasureBounds", "Neighborhood", "OracleValue", "ResourceCapError",
    "RunTrace", "Similitude", "Tolerances", "TruncationError", "UndefinedDensityError",
    "ValidationError", "apply", "build", "certify_equality", "compose", "diameter_check",
    "estimate_gap", "exact_gap", "fixed_point", "h_k", "initial_points", "lower_bound",
    "mu_ball_bounds", "mu_k_ball", "mu_weight", "next_generation", "oracle", "run", "scan_center",
    "similarity_dimension", "update_gap", "verify_gasket_inequality", "window",
]
