"""Discrete density maximization over generations, with tie collection,
stability tracking and lower-bound certificates.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numba
import numpy as np

from . import _kernels
from .config import DEFAULT_TOLERANCES, Tolerances
from .errors import ValidationError
from .generation import (DEFAULT_MAX_POINTS, GapEstimate, GenerationState, Neighborhood,
                         initial_points, next_generation)
from .ifs import Address, IFSSystem, canonical_address
from .measure import certify_equality, default_certificate_depth

log = logging.getLogger(__name__)

BUCKETS = 128


def window(gap: GapEstimate, r_min: float) -> tuple:
    """Admissible radius interval ``[c_tilde, c_tilde / r_min]``."""
    if not gap.positive:
        raise ValidationError(f"gap estimate {gap.c_tilde} is not positive")
    return gap.c_tilde, gap.c_tilde / r_min


def effective_window(gap: GapEstimate, r_min: float, tol: Tolerances = DEFAULT_TOLERANCES) -> tuple:
    """Bounds used by the scan: admissible means ``lo < d <= hi``.

    The left edge is open.  For ``d <= c`` a ball around a point of a
    first-level cylinder sees only that cylinder, so its density equals the
    density of the pulled-back ball with radius ``d / r_i``, which lies inside
    the window; dropping the edge loses nothing.  Both edges carry a small
    relative slack so that rounding in computed distances is harmless.
    """
    lo, hi = window(gap, r_min)
    return lo * (1.0 + tol.window_edge), hi * (1.0 + tol.window_edge)


@dataclass(frozen=True)
class CenterScan:
    value: float
    radius: float
    witness: int


def density_profile(nbhd: Neighborhood, lo: float, hi: float, s: float, eps: float = 0.0):
    """Density at every distinct admissible distance of one neighborhood.

    Returns arrays ``(radius, value, witness, mass)``; ``lo``/``hi`` are the
    effective bounds of :func:`effective_window`.
    """
    d = nbhd.distances
    mass = nbhd.cumulative[np.searchsorted(d, d - eps, side="left")]
    first = np.searchsorted(d, d, side="left") == np.arange(len(d))
    ok = first & (d > lo) & (d <= hi) & (mass > 0)
    idx = np.nonzero(ok)[0]
    radius = d[idx]
    return radius, (2.0 * radius) ** s / mass[idx], nbhd.indices[idx], mass[idx]


def scan_center(nbhd: Neighborhood, gap: GapEstimate, s: float, r_min: float,
                eps: float = 0.0, tol: Tolerances = DEFAULT_TOLERANCES) -> CenterScan | None:
    """Best density over the window for one center, or ``None`` if nothing is admissible."""
    lo, hi = effective_window(gap, r_min, tol)
    if nbhd.cap < hi:
        raise ValidationError("neighborhood truncated below the window")
    radius, value, witness, _ = density_profile(nbhd, lo, hi, s, eps)
    if len(value) == 0:
        return None
    j = int(np.argmax(value))
    return CenterScan(float(value[j]), float(radius[j]), int(witness[j]))


@dataclass(frozen=True)
class CandidateBall:
    center_index: int
    witness_index: int
    center_address: Address
    witness_address: Address
    radius: float
    value: float
    ball_mass: float
    certified: bool = False

    @property
    def key(self) -> tuple:
        """Generation-independent identity used for stability comparisons."""
        return canonical_address(self.center_address), canonical_address(self.witness_address)


@dataclass(frozen=True)
class GenerationResult:
    k: int
    size: int
    m_tilde: float | None
    candidates: tuple
    stable: bool
    seconds: float

    @property
    def certified(self) -> bool:
        return any(c.certified for c in self.candidates)


@dataclass
class RunTrace:
    system: IFSSystem
    gap: GapEstimate
    tie_tol: float
    eps: float
    results: list = field(default_factory=list)
    final_state: GenerationState | None = field(default=None, repr=False)

    @property
    def stable(self) -> bool:
        return bool(self.results) and self.results[-1].stable

    @property
    def final(self) -> GenerationResult:
        return self.results[-1]

    def __len__(self):
        return len(self.results)


def same_candidates(a, b, radius_tol: float) -> bool:
    if len(a) != len(b) or not a:
        return False
    return all(x.key == y.key and abs(x.radius - y.radius) <= radius_tol for x, y in zip(a, b))


def scan_all(state: GenerationState, s: float, lo: float, hi: float, eps: float,
             threads: int | None = None, kernel: str = "bucketed"):
    """Per-center best value, radius and witness index over the whole generation."""
    X = np.ascontiguousarray(state.points.T)
    w = np.ascontiguousarray(state.weights)
    if threads is not None:
        numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))
    nblocks = max(1, min(state.size, 8 * numba.get_num_threads()))
    if kernel == "bucketed":
        return _kernels.scan_bucketed(X, w, s, lo, hi, eps, nblocks, BUCKETS)
    if kernel == "sorted":
        return _kernels.scan_sorted(X, w, s, lo, hi, eps, nblocks)
    raise ValueError(f"unknown kernel {kernel!r}")


def collect_candidates(state: GenerationState, values: np.ndarray, s: float,
                       lo: float, hi: float, eps: float, tie_tol: float,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> list:
    """All balls within relative ``tie_tol`` of the generation maximum.

    Radii at one center closer than the stability tolerance are merged into
    one ball, represented by its smallest witness index.
    """
    top = float(values.max())
    if top < 0:
        return []
    threshold = top * (1.0 - tie_tol)
    found = []
    for i in np.nonzero(values >= threshold)[0]:
        nbhd = state.neighbors(int(i), hi)
        radius, value, witness, mass = density_profile(nbhd, lo, hi, s, eps)
        keep = np.nonzero(value >= threshold)[0]
        groups = []
        for j in keep:
            if groups and radius[j] - radius[groups[-1][-1]] <= tol.stability_radius:
                groups[-1].append(j)
            else:
                groups.append([j])
        for g in groups:
            j = min(g, key=lambda q: witness[q])
            found.append(CandidateBall(
                int(i), int(witness[j]), state.address(int(i)), state.address(int(witness[j])),
                float(radius[j]), float(value[j]), float(mass[j])))
    found.sort(key=lambda c: (c.center_index, c.witness_index))
    return found


def run(system: IFSSystem, gap: GapEstimate, k_max: int, tie_tol: float | None = None, *,
        eps: float | None = None, certify: bool = True, cert_depth: int | None = None,
        threads: int | None = None, max_points: int = DEFAULT_MAX_POINTS,
        tol: Tolerances = DEFAULT_TOLERANCES, kernel: str = "bucketed") -> RunTrace:
    """Scan generations ``1..k_max`` and record the maximizing balls."""
    if k_max < 1:
        raise ValidationError("k_max must be at least 1")
    tie_tol = tol.tie if tie_tol is None else tie_tol
    eps = tol.dedupe_eps if eps is None else eps
    lo, hi = effective_window(gap, system.r_min, tol)
    s = system.s
    depth = cert_depth if cert_depth is not None else default_certificate_depth(system, tol)
    trace = RunTrace(system, gap, tie_tol, eps)
    state = None
    prev = ()
    for k in range(1, k_max + 1):
        t0 = time.perf_counter()
        state = initial_points(system) if state is None else next_generation(system, state, max_points)
        values, _, _ = scan_all(state, s, lo, hi, eps, threads, kernel)
        candidates = collect_candidates(state, values, s, lo, hi, eps, tie_tol, tol)
        if certify:
            candidates = [_certified(system, state, c, hi, depth, eps, tol) for c in candidates]
        m_tilde = max((c.value for c in candidates), default=None)
        stable = same_candidates(prev, candidates, tol.stability_radius)
        result = GenerationResult(k, state.size, m_tilde, tuple(candidates), stable,
                                  time.perf_counter() - t0)
        log.info("generation %d: %d points, m=%s, %d candidates, %.2fs", k, state.size,
                 m_tilde, len(candidates), result.seconds)
        trace.results.append(result)
        prev = candidates
    trace.final_state = state
    return trace


def _certified(system, state, cand: CandidateBall, hi, depth, eps, tol) -> CandidateBall:
    nbhd = state.neighbors(cand.center_index, hi)
    ok = certify_equality(system, state.points[cand.center_index], cand.radius, nbhd,
                          max_depth=depth, eps=eps, tol=tol)
    return CandidateBall(cand.center_index, cand.witness_index, cand.center_address,
                         cand.witness_address, cand.radius, cand.value, cand.ball_mass, ok)


def lower_bound(trace: RunTrace) -> float | None:
    """Largest ``m_tilde`` among generations with a certified candidate."""
    if not trace.results:
        raise ValueError("empty trace")
    certified = [max(c.value for c in r.candidates if c.certified)
                 for r in trace.results if r.certified]
    return max(certified) if certified else None


def brute_force_maximum(state: GenerationState, gap: GapEstimate, s: float, r_min: float,
                        eps: float = 0.0, tol: Tolerances = DEFAULT_TOLERANCES) -> float | None:
    """Reference maximum by a plain double loop over all point pairs."""
    lo, hi = effective_window(gap, r_min, tol)
    best = None
    P, w = state.points, state.weights
    for x in range(state.size):
        dist = [math.dist(P[x], P[y]) for y in range(state.size)]
        for y in range(state.size):
            d = dist[y]
            if not lo < d <= hi:
                continue
            mass = math.fsum(w[z] for z in range(state.size) if dist[z] < d - eps)
            if mass > 0:
                h = (2.0 * d) ** s / mass
                best = h if best is None else max(best, h)
    return best
