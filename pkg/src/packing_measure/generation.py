"""Nested point sets ``A_k``, their distance sets and separation-gap estimates.

Points of ``A_k`` are stored map-major, so row ``j`` carries the address
whose base-``N`` digits spell ``j``.  Point ``w`` of ``A_{k-1}`` reappears
in ``A_k`` as ``w + (w[-1],)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .config import DEFAULT_TOLERANCES
from .errors import GapEstimationError, ResourceCapError, ValidationError
from .ifs import Address, IFSSystem, address_of, compose, fixed_point, index_of

DEFAULT_MAX_POINTS = 2_000_000
PREPASS_MAX_POINTS = 100_000


@dataclass(frozen=True)
class LabeledPoint:
    point: np.ndarray
    address: Address


@dataclass(frozen=True)
class DistanceRecord:
    value: float
    source: Address
    target: Address


@dataclass(frozen=True)
class GapEstimate:
    """Lower estimate ``c_tilde`` of the minimal gap between first-level cylinders.

    ``positive`` is false when ``c_k - 2 r_max**k |E|`` has not yet turned
    positive, meaning a deeper generation is needed.
    """

    k_used: int
    c_k: float
    c_tilde: float
    exact: bool

    @property
    def positive(self) -> bool:
        return self.c_tilde > 0


@dataclass(frozen=True)
class Neighborhood:
    """Distances from one center to every point within ``cap``, ascending.

    Equal distances keep ascending point-index order.
    """

    center: int
    distances: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    cap: float

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.weights)))


@dataclass(frozen=True, eq=False)
class GenerationState:
    k: int
    N: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def address(self, index: int) -> Address:
        return address_of(index, self.k, self.N)

    def index(self, address) -> int:
        if len(address) != self.k:
            raise ValueError(f"address length {len(address)} does not match generation {self.k}")
        return index_of(address, self.N)

    def labeled(self, index: int) -> LabeledPoint:
        return LabeledPoint(self.points[index], self.address(index))

    def __iter__(self):
        return (self.labeled(j) for j in range(self.size))

    @cached_property
    def is_new(self) -> np.ndarray:
        """Points whose last two address digits differ (absent from ``A_{k-1}``)."""
        if self.k == 1:
            return np.ones(self.size, dtype=bool)
        j = np.arange(self.size)
        return (j % self.N) != ((j // self.N) % self.N)

    @cached_property
    def top_digit(self) -> np.ndarray:
        return np.arange(self.size) // self.N ** (self.k - 1)

    def embed_previous(self, index_prev: np.ndarray | int):
        """Indices in this generation of points indexed in the previous one."""
        return np.asarray(index_prev) * self.N + np.asarray(index_prev) % self.N

    def neighbors(self, center: int, cap: float = math.inf) -> Neighborhood:
        dist = np.linalg.norm(self.points - self.points[center], axis=1)
        keep = np.nonzero(dist <= cap)[0]
        order = keep[np.argsort(dist[keep], kind="stable")]
        return Neighborhood(center, dist[order], order, self.weights[order], cap)

    def distance_records(self, new_only: bool = False) -> list:
        """All pairs ``(x, y)``, ``x`` before ``y``, as records.

        With ``new_only`` only pairs with at least one new endpoint are kept.
        Quadratic in the point count; intended for small generations.
        """
        n = self.size
        i, j = np.triu_indices(n, 1)
        if new_only:
            mask = self.is_new[i] | self.is_new[j]
            i, j = i[mask], j[mask]
        values = np.linalg.norm(self.points[i] - self.points[j], axis=1)
        return [DistanceRecord(float(v), self.address(a), self.address(b)) for v, a, b in zip(values, i, j)]


def distance_values(state: GenerationState, new_only: bool = False) -> np.ndarray:
    """Sorted distinct pairwise distances; ``new_only`` restricts to new pairs."""
    if not new_only:
        return np.unique(pdist(state.points))
    return np.unique([r.value for r in state.distance_records(new_only=True)])


def _check_distinct(points: np.ndarray, tol: float = DEFAULT_TOLERANCES.coincidence):
    tree = cKDTree(points)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs):
        a, b = pairs[0]
        raise ValidationError(f"points {a + 1} and {b + 1} coincide; strong separation fails")


def initial_points(system: IFSSystem) -> GenerationState:
    points = np.array([fixed_point(f) for f in system.maps])
    _check_distinct(points)
    return GenerationState(1, system.N, points, np.array(system.probabilities))


def next_generation(system: IFSSystem, prev: GenerationState,
                    max_points: int = DEFAULT_MAX_POINTS) -> GenerationState:
    size = prev.size * system.N
    if size > max_points:
        raise ResourceCapError(f"generation {prev.k + 1} needs {size} points, cap is {max_points}")
    points = system.expand(prev.points)
    weights = np.concatenate([p * prev.weights for p in system.probabilities])
    return GenerationState(prev.k + 1, system.N, points, weights)


def generations(system: IFSSystem, k_max: int, max_points: int = DEFAULT_MAX_POINTS):
    """Yield ``A_1, ..., A_{k_max}``."""
    state = initial_points(system)
    yield state
    for _ in range(k_max - 1):
        state = next_generation(system, state, max_points)
        yield state


def cross_cylinder_min(state: GenerationState, new_only: bool = True) -> float:
    """Minimal distance between points in different first-level cylinders.

    With ``new_only`` at least one endpoint of each pair must be new.
    """
    N, top = state.N, state.top_digit
    best = math.inf
    per = state.size // N
    if state.k == 1:
        return float(pdist(state.points).min())
    new = state.is_new
    for a in range(N):
        block = slice(a * per, (a + 1) * per)
        tree = cKDTree(state.points[block])
        mask = top != a
        if new_only:
            mask &= new
        queries = np.nonzero(mask)[0]
        if len(queries) == 0:
            continue
        dist, _ = tree.query(state.points[queries], k=1)
        best = min(best, float(dist.min()))
    return best


def update_gap(system: IFSSystem, state: GenerationState, prev_c: float = math.inf) -> GapEstimate:
    """Fold the new cross-cylinder pairs of ``state`` into the running minimum."""
    c_k = min(prev_c, cross_cylinder_min(state, new_only=True))
    return GapEstimate(state.k, c_k, c_k - 2.0 * system.r_max ** state.k * system.diameter_scale,
                       exact=False)


def exact_gap(system: IFSSystem, value: float | None = None) -> GapEstimate:
    if value is None:
        value = system.exact_gap
    if value is None:
        raise ValidationError("system carries no exact gap")
    if not value > 0:
        raise ValidationError(f"gap must be positive, got {value}")
    return GapEstimate(0, float(value), float(value), exact=True)


def prepass_depth(system: IFSSystem, max_points: int = PREPASS_MAX_POINTS) -> int:
    return max(1, int(math.floor(math.log(max_points) / math.log(system.N) + 1e-12)))


def estimate_gap(system: IFSSystem, depth: int | None = None,
                 max_points: int = PREPASS_MAX_POINTS) -> GapEstimate:
    """Pre-pass estimate of the gap, frozen at depth ``depth``.

    Without ``depth`` the deepest generation with at most ``max_points``
    points is used.  Raises when the estimate is not positive there.
    """
    if depth is None:
        depth = prepass_depth(system, max_points)
    if depth < 1:
        raise ValueError("pre-pass depth must be at least 1")
    c = math.inf
    gap = None
    for state in generations(system, depth, max_points=max(max_points, system.N ** depth)):
        gap = update_gap(system, state, c)
        c = gap.c_k
    if not gap.positive:
        raise GapEstimationError(
            f"gap estimate not positive at depth {depth} (c_k={gap.c_k:.6g}, c_tilde={gap.c_tilde:.6g})")
    return gap


def label_point(system: IFSSystem, address) -> LabeledPoint:
    """Evaluate ``f_w(x_{w_k})`` directly from the address."""
    if not address:
        raise ValueError("points of A_k have non-empty addresses")
    x = compose(system, address)(system.fixed_points[address[-1] - 1])
    return LabeledPoint(x, tuple(address))


def closest_cylinders(system: IFSSystem, depth: int) -> tuple:
    """First-level cylinder pair ``(i, j)`` whose depth-``depth`` points come
    closest, with that distance."""
    pts = system.points(depth)
    per = len(pts) // system.N
    best = (math.inf, 0, 0)
    trees = [cKDTree(pts[a * per:(a + 1) * per]) for a in range(system.N)]
    for a in range(system.N):
        for b in range(a + 1, system.N):
            dist, _ = trees[a].query(pts[b * per:(b + 1) * per], k=1)
            best = min(best, (float(dist.min()), a + 1, b + 1))
    return best[1], best[2], best[0]
