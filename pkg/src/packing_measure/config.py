"""Numerical tolerances, gathered in one immutable record."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    orthogonality: float = 1e-12
    dimension: float = 1e-14
    fixed_point_residual: float = 1e-12
    normalization: float = 1e-9
    coincidence: float = 1e-12
    # Distances closer than this are treated as equal when counting boundary points.
    dedupe_eps: float = 1e-12
    # Relative slack applied to both window edges.
    window_edge: float = 1e-12
    tie: float = 1e-9
    stability_radius: float = 1e-9
    certificate_width: float = 1e-12
    certificate_stop_mass: float = 1e-13
    # Absorbs rounding in composed cylinder maps when classifying against the sphere.
    certificate_margin: float = 1e-14
    certificate_depth: int = 30
    certificate_max_nodes: int = 50_000


DEFAULT_TOLERANCES = Tolerances()
