"""Natural measure weights, discrete ball masses and densities, and
certified bounds on the exact mass of a ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .errors import TruncationError, UndefinedDensityError
from .generation import GenerationState, Neighborhood
from .ifs import IFSSystem, index_of


def mu_weight(system: IFSSystem, address) -> float:
    """Natural measure ``r_w**s`` of the cylinder ``E_w``."""
    index_of(address, system.N)  # validates the digits
    if system.homogeneous:
        return float(system.N) ** -len(address)
    return float(np.prod([system.probabilities[d - 1] for d in address]))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Weights of the generation-``k`` points, indexed like the points."""

    k: int
    N: int
    weights: np.ndarray

    @classmethod
    def of(cls, state: GenerationState) -> "DiscreteMeasure":
        return cls(state.k, state.N, state.weights)

    @property
    def total(self) -> float:
        return float(math.fsum(self.weights))

    def cylinder_mass(self, prefix) -> float:
        """Mass of points whose address starts with ``prefix``."""
        j = len(prefix)
        if j > self.k:
            raise ValueError("prefix longer than the generation")
        span = self.N ** (self.k - j)
        start = index_of(prefix, self.N) * span
        return float(math.fsum(self.weights[start:start + span]))


def mu_k_ball(neighborhood: Neighborhood, d: float, eps: float = 0.0) -> float:
    """Discrete mass of the open ball of radius ``d``.

    Points closer than ``eps`` to the sphere count as on it and are excluded.
    """
    if d > neighborhood.cap:
        raise TruncationError(f"radius {d} exceeds neighbor cap {neighborhood.cap}")
    pos = np.searchsorted(neighborhood.distances, d - eps, side="left")
    return float(neighborhood.cumulative[pos])


def h_k(neighborhood: Neighborhood, d: float, s: float, eps: float = 0.0) -> float:
    mass = mu_k_ball(neighborhood, d, eps)
    if mass <= 0.0:
        raise UndefinedDensityError(f"empty discrete ball at radius {d}")
    return (2.0 * d) ** s / mass


@dataclass(frozen=True)
class MeasureBounds:
    lower: float
    upper: float
    depth: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def default_certificate_depth(system: IFSSystem, tol=DEFAULT_TOLERANCES) -> int:
    """Depth at which a single straddling chain weighs less than the stop mass."""
    needed = math.log(tol.certificate_stop_mass) / math.log(float(system.probabilities.max()))
    return max(tol.certificate_depth, int(math.ceil(needed)))


def _bounds(system: IFSSystem, center, d: float, max_depth: int, tol, target=None):
    """Breadth-first cylinder classification.

    Returns ``(lower, upper, depth, rejected)``; ``rejected`` is set when
    ``target`` fell outside the bounds, which rules out equality early.
    """
    center = np.asarray(center, dtype=float)
    c_E, R_E = system.enclosing_ball
    margin = tol.certificate_margin * max(1.0, d)
    A = system.linear_parts
    b = system.translations
    p = system.probabilities
    n = system.dimension
    # Straddling nodes: composed linear part, translation and weight.
    lin = np.eye(n)[None, :, :]
    trans = np.zeros((1, n))
    ratio = np.ones(1)
    weight = np.ones(1)
    lower = 0.0
    depth = 0
    while True:
        cen = np.einsum("mij,j->mi", lin, c_E) + trans
        dist = np.linalg.norm(cen - center, axis=1)
        rho = ratio * R_E
        inside = dist + rho <= d - margin
        outside = dist - rho >= d + margin
        straddle = ~(inside | outside)
        lower += float(math.fsum(weight[inside]))
        open_mass = float(math.fsum(weight[straddle]))
        upper = min(1.0, lower + open_mass)
        lower = min(lower, upper)
        if target is not None and not (lower - tol.certificate_width <= target <= upper + tol.certificate_width):
            return lower, upper, depth, True
        if open_mass < tol.certificate_stop_mass or depth >= max_depth:
            return lower, upper, depth, False
        m = int(straddle.sum())
        if m * system.N > tol.certificate_max_nodes:
            return lower, upper, depth, False
        lin, trans, ratio, weight = lin[straddle], trans[straddle], ratio[straddle], weight[straddle]
        lin_next = np.einsum("mij,njk->mnik", lin, A).reshape(-1, n, n)
        trans = (trans[:, None, :] + np.einsum("mij,nj->mni", lin, b)).reshape(-1, n)
        ratio = (ratio[:, None] * system.ratios[None, :]).reshape(-1)
        weight = (weight[:, None] * p[None, :]).reshape(-1)
        lin = lin_next
        depth += 1


def mu_ball_bounds(system: IFSSystem, center, d: float, max_depth: int | None = None,
                   tol=DEFAULT_TOLERANCES) -> MeasureBounds:
    """Interval guaranteed to contain the natural measure of ``B(center, d)``.

    Cylinders whose enclosing ball lies inside the ball count fully,
    those outside not at all, and straddling ones are subdivided up to
    ``max_depth`` and then counted in the upper bound only.  The sphere
    itself is treated as a null set.
    """
    if max_depth is None:
        max_depth = default_certificate_depth(system, tol)
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    if not d > 0:
        raise ValueError("radius must be positive")
    lower, upper, depth, _ = _bounds(system, center, d, max_depth, tol)
    return MeasureBounds(lower, upper, depth)


def certify_equality(system: IFSSystem, center, d: float, neighbors: Neighborhood,
                     max_depth: int | None = None, eps: float = 0.0,
                     tol=DEFAULT_TOLERANCES) -> bool:
    """True when the exact mass of ``B(center, d)`` provably equals the discrete one.

    Equality is accepted once the certified interval has width at most
    the certificate tolerance and lies within that tolerance of the
    discrete open-ball mass.  Failure to certify returns false.
    """
    if max_depth is None:
        max_depth = default_certificate_depth(system, tol)
    point = getattr(center, "point", center)
    discrete = mu_k_ball(neighbors, d, eps)
    lower, upper, _, rejected = _bounds(system, point, d, max_depth, tol, target=discrete)
    if rejected:
        return False
    return (upper - lower <= tol.certificate_width
            and abs(discrete - lower) <= tol.certificate_width
            and abs(discrete - upper) <= tol.certificate_width)
