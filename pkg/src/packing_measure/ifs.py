"""Contracting similitudes, systems of them, and their derived constants.

A similitude is ``f(x) = r * O @ x + b`` with ``0 < r <= 1`` and ``O``
orthogonal.  Points are numpy vectors of length 1, 2 or 3.  Addresses are
tuples of 1-based map indices; ``f_w = f_{w[0]} o ... o f_{w[-1]}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from .config import DEFAULT_TOLERANCES
from .errors import ValidationError

Address = tuple


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Similitude:
    ratio: float
    orthogonal: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        ratio = float(self.ratio)
        O = np.atleast_2d(np.asarray(self.orthogonal, dtype=float))
        b = np.atleast_1d(np.asarray(self.translation, dtype=float))
        n = b.shape[0]
        if b.ndim != 1 or not 1 <= n <= 3:
            raise ValidationError(f"translation must be a vector of length 1..3, got shape {b.shape}")
        if O.shape != (n, n):
            raise ValidationError(f"orthogonal part has shape {O.shape}, expected {(n, n)}")
        if not (math.isfinite(ratio) and 0.0 < ratio <= 1.0):
            raise ValidationError(f"ratio must lie in (0, 1], got {ratio}")
        if not (np.all(np.isfinite(O)) and np.all(np.isfinite(b))):
            raise ValidationError("non-finite entries in similitude")
        err = np.max(np.abs(O @ O.T - np.eye(n)))
        if err > DEFAULT_TOLERANCES.orthogonality:
            raise ValidationError(f"orthogonal part deviates from orthogonality by {err:.3g}")
        object.__setattr__(self, "ratio", ratio)
        object.__setattr__(self, "orthogonal", _frozen(O))
        object.__setattr__(self, "translation", _frozen(b))

    @classmethod
    def homothety(cls, ratio: float, translation) -> "Similitude":
        b = np.atleast_1d(np.asarray(translation, dtype=float))
        return cls(ratio, np.eye(b.shape[0]), b)

    @classmethod
    def identity(cls, dimension: int) -> "Similitude":
        return cls(1.0, np.eye(dimension), np.zeros(dimension))

    @property
    def dimension(self) -> int:
        return self.translation.shape[0]

    @property
    def linear(self) -> np.ndarray:
        return self.ratio * self.orthogonal

    def __call__(self, x):
        return apply(self, x)

    def then(self, inner: "Similitude") -> "Similitude":
        """Return ``self o inner``."""
        if inner.dimension != self.dimension:
            raise ValidationError("dimension mismatch in composition")
        return Similitude(
            self.ratio * inner.ratio,
            self.orthogonal @ inner.orthogonal,
            self.translation + self.ratio * (self.orthogonal @ inner.translation),
        )

    def __eq__(self, other):
        if not isinstance(other, Similitude):
            return NotImplemented
        return (self.ratio == other.ratio
                and np.array_equal(self.orthogonal, other.orthogonal)
                and np.array_equal(self.translation, other.translation))

    def __hash__(self):
        return hash((self.ratio, self.orthogonal.tobytes(), self.translation.tobytes()))


def apply(f: Similitude, x) -> np.ndarray:
    """Evaluate ``f`` at a point, or row-wise at an ``(m, n)`` array of points."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != f.dimension:
        raise ValidationError(f"point has dimension {x.shape[-1]}, map has {f.dimension}")
    return x @ f.linear.T + f.translation


def fixed_point(f: Similitude) -> np.ndarray:
    if not f.ratio < 1.0:
        raise ValidationError("fixed point requires a strict contraction")
    n = f.dimension
    x = np.linalg.solve(np.eye(n) - f.linear, f.translation)
    residual = np.max(np.abs(apply(f, x) - x))
    if residual > DEFAULT_TOLERANCES.fixed_point_residual:
        raise RuntimeError(f"fixed point residual {residual:.3g} too large")
    return x


def similarity_dimension(ratios: Sequence[float], dimension: int = 3,
                         tol: float = DEFAULT_TOLERANCES.dimension, closed_form: bool = True) -> float:
    """Solve ``sum r_i**s == 1`` for ``s``.

    Bisection starts on ``[0, dimension + 1]``; equal ratios use
    ``log N / log(1/r)`` unless ``closed_form`` is false.
    """
    r = np.asarray(ratios, dtype=float)
    if r.size < 2 or np.any(r <= 0) or np.any(r >= 1):
        raise ValidationError("need at least two ratios in (0, 1)")
    if closed_form and np.all(r == r[0]):
        return math.log(r.size) / math.log(1.0 / r[0])
    lo, hi = 0.0, float(dimension + 1)
    while np.sum(r ** hi) > 1.0:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if np.sum(r ** mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DiameterEnclosure:
    lo: float
    hi: float
    normalized: bool

    def __contains__(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True, eq=False)
class IFSSystem:
    """An ordered list of ``N >= 2`` contracting similitudes of one dimension.

    ``exact_gap`` optionally records the known minimal distance between
    distinct first-level cylinders; families set it, explicit systems may.
    """

    maps: tuple
    exact_gap: float | None = None
    name: str = "custom"

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        if len(maps) < 2:
            raise ValidationError("a system needs at least two maps")
        if not all(isinstance(f, Similitude) for f in maps):
            raise ValidationError("maps must be Similitude instances")
        dims = {f.dimension for f in maps}
        if len(dims) != 1:
            raise ValidationError(f"maps disagree on dimension: {sorted(dims)}")
        for i, f in enumerate(maps, 1):
            if not f.ratio < 1.0:
                raise ValidationError(f"map {i} is not a contraction (ratio {f.ratio})")
        if self.exact_gap is not None and not self.exact_gap > 0:
            raise ValidationError("exact gap must be positive")

    @property
    def N(self) -> int:
        return len(self.maps)

    @property
    def dimension(self) -> int:
        return self.maps[0].dimension

    @cached_property
    def ratios(self) -> np.ndarray:
        return _frozen([f.ratio for f in self.maps])

    @property
    def r_min(self) -> float:
        return float(self.ratios.min())

    @property
    def r_max(self) -> float:
        return float(self.ratios.max())

    @property
    def homogeneous(self) -> bool:
        return bool(np.all(self.ratios == self.ratios[0]))

    @cached_property
    def s(self) -> float:
        return similarity_dimension(self.ratios, self.dimension)

    @cached_property
    def probabilities(self) -> np.ndarray:
        """Natural-measure weights ``r_i**s`` of the first-level cylinders."""
        if self.homogeneous:
            return _frozen(np.full(self.N, 1.0 / self.N))
        return _frozen(self.ratios ** self.s)

    @cached_property
    def fixed_points(self) -> np.ndarray:
        return _frozen([fixed_point(f) for f in self.maps])

    @cached_property
    def linear_parts(self) -> np.ndarray:
        return _frozen([f.linear for f in self.maps])

    @cached_property
    def translations(self) -> np.ndarray:
        return _frozen([f.translation for f in self.maps])

    def expand(self, points: np.ndarray) -> np.ndarray:
        """Image of a point array under every map, map-major order."""
        return np.concatenate([points @ A.T + b for A, b in zip(self.linear_parts, self.translations)])

    def points(self, k: int) -> np.ndarray:
        """The generation-``k`` point set, row ``j`` having the address ``address_of(j, k, N)``."""
        if k < 1:
            raise ValueError("generation index starts at 1")
        pts = np.array(self.fixed_points)
        for _ in range(k - 1):
            pts = self.expand(pts)
        return pts

    @cached_property
    def diameter_bound(self) -> float:
        """Certified upper bound on ``|E|``.

        Every point of ``E`` lies within ``r_max**j |E|`` of the generation-``j``
        points, so ``|E| <= D_j / (1 - 2 r_max**j)`` with ``D_j`` the largest
        distance among those points.
        """
        j = _reference_depth(self.N)
        shrink = 1.0 - 2.0 * self.r_max ** j
        return max_pairwise_distance(self.points(j)) / shrink if shrink > 0 else math.inf

    @cached_property
    def diameter_scale(self) -> float:
        """``|E|`` as used by the gap correction: 1 for normalized systems."""
        return 1.0 if diameter_check(self, _reference_depth(self.N)).normalized else self.diameter_bound

    @cached_property
    def enclosing_ball(self) -> tuple:
        """A ball ``(center, radius)`` certified to contain the attractor.

        Every point of a depth-``j`` cylinder is within ``r_max**j |E|`` of the
        image of a fixed point under the same cylinder map.
        """
        j = _reference_depth(self.N)
        pts = self.points(j)
        center = self.fixed_points.mean(axis=0)
        radius = float(np.max(np.linalg.norm(pts - center, axis=1))) + self.r_max ** j * self.diameter_bound
        return _frozen(center), radius

    def __eq__(self, other):
        if not isinstance(other, IFSSystem):
            return NotImplemented
        return self.maps == other.maps and self.exact_gap == other.exact_gap

    def __hash__(self):
        return hash((self.maps, self.exact_gap))


def _reference_depth(N: int) -> int:
    """Depth with at most 4096 points."""
    return max(1, int(math.floor(math.log(4096) / math.log(N))))


def compose(system: IFSSystem, w: Sequence[int]) -> Similitude:
    """The cylinder map ``f_w``; the empty address gives the identity."""
    result = Similitude.identity(system.dimension)
    for digit in w:
        if not (isinstance(digit, (int, np.integer)) and 1 <= digit <= system.N):
            raise ValidationError(f"invalid address digit {digit!r} for {system.N} maps")
        result = result.then(system.maps[digit - 1])
    return result


def max_pairwise_distance(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if points.shape[1] == 1:
        return float(points.max() - points.min())
    if len(points) > 2000:
        try:
            points = points[ConvexHull(points).vertices]
        except QhullError:
            pass
    return float(pdist(points).max())


def diameter_check(system: IFSSystem, depth: int,
                   tol: float = DEFAULT_TOLERANCES.normalization) -> DiameterEnclosure:
    """Certified enclosure of ``|E|`` from the generation-``depth`` points."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    lo = max_pairwise_distance(system.points(depth))
    shrink = 1.0 - 2.0 * system.r_max ** depth
    hi = lo / shrink if shrink > 0 else math.inf
    return DiameterEnclosure(lo, hi, lo - tol <= 1.0 <= hi + tol)


def address_of(index: int, k: int, N: int) -> Address:
    digits = []
    for _ in range(k):
        index, d = divmod(int(index), N)
        digits.append(d + 1)
    if index:
        raise ValueError("index out of range for generation")
    return tuple(reversed(digits))


def index_of(address: Sequence[int], N: int) -> int:
    index = 0
    for d in address:
        if not 1 <= d <= N:
            raise ValidationError(f"invalid address digit {d!r}")
        index = index * N + (d - 1)
    return index


def canonical_address(address: Sequence[int]) -> Address:
    """Collapse the trailing run of a repeated digit.

    ``w + (i,)`` and ``w + (i, i)`` label the same point, so this is the
    generation-independent name of a point.
    """
    a = tuple(address)
    while len(a) >= 2 and a[-1] == a[-2]:
        a = a[:-1]
    return a


def format_address(address: Sequence[int], N: int | None = None) -> str:
    """Digit string such as ``"121"``; dot-separated when digits exceed 9."""
    if N is not None and N > 9 or any(d > 9 for d in address):
        return ".".join(str(d) for d in address)
    return "".join(str(d) for d in address)
