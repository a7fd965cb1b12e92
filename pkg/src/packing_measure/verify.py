"""Invariant checks that need no closed-form reference value."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLERANCES
from .generation import GapEstimate, distance_values, estimate_gap, exact_gap, generations
from .ifs import IFSSystem
from .measure import DiscreteMeasure, mu_ball_bounds
from .packing import brute_force_maximum, run, window


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _contains(sorted_values: np.ndarray, queries: np.ndarray, tol: float) -> bool:
    pos = np.clip(np.searchsorted(sorted_values, queries), 1, len(sorted_values) - 1)
    near = np.minimum(np.abs(sorted_values[pos] - queries), np.abs(sorted_values[pos - 1] - queries))
    return bool(np.all(near <= tol))


def check_mass(system, states, tol=1e-12) -> CheckResult:
    worst = 0.0
    for st in states:
        m = DiscreteMeasure.of(st)
        worst = max(worst, abs(m.total - 1.0))
        for j in range(1, min(st.k, 3) + 1):
            for prefix in [(1,) * j, (system.N,) * j, tuple((q % system.N) + 1 for q in range(j))]:
                expected = float(np.prod([system.probabilities[d - 1] for d in prefix]))
                worst = max(worst, abs(m.cylinder_mass(prefix) - expected))
    return CheckResult("mass normalization", worst <= tol, f"max deviation {worst:.3g}")


def check_nesting(states, tol=1e-12) -> CheckResult:
    worst = 0.0
    for prev, cur in zip(states, states[1:]):
        emb = cur.points[cur.embed_previous(np.arange(prev.size))]
        worst = max(worst, float(np.max(np.abs(emb - prev.points))))
    return CheckResult("A_k nesting", worst <= tol, f"max deviation {worst:.3g}")


def check_delta_monotone(states, tol=1e-12, max_points=3000) -> CheckResult:
    small = [st for st in states if st.size <= max_points]
    ok = all(_contains(distance_values(b), distance_values(a), tol) for a, b in zip(small, small[1:]))
    return CheckResult("distance-set monotonicity", ok, f"checked {max(len(small) - 1, 0)} steps")


def check_gap_sandwich(system: IFSSystem, depth: int, tol=1e-12) -> CheckResult:
    if system.exact_gap is None:
        return CheckResult("gap sandwich", True, "skipped: no exact gap")
    gap = estimate_gap(system, depth)
    c = system.exact_gap
    ok = c - 2 * system.r_max ** gap.k_used * system.diameter_scale - tol <= gap.c_tilde <= c + tol
    return CheckResult("gap sandwich", ok, f"c={c:.9g} c_tilde={gap.c_tilde:.9g} k={gap.k_used}")


def check_brute_force(system, gap, trace, k_max=3, rel=1e-12) -> CheckResult:
    worst = 0.0
    for st, res in zip(generations(system, k_max), trace.results):
        ref = brute_force_maximum(st, gap, system.s, system.r_min, trace.eps)
        if (ref is None) != (res.m_tilde is None):
            return CheckResult("brute-force maximum", False, f"generation {st.k}: {ref} vs {res.m_tilde}")
        if ref is not None:
            worst = max(worst, abs(ref - res.m_tilde) / ref)
    return CheckResult("brute-force maximum", worst <= rel, f"max relative deviation {worst:.3g}")


def check_window(system, gap, trace, tol=1e-12) -> CheckResult:
    lo, hi = window(gap, system.r_min)
    radii = [c.radius for r in trace.results for c in r.candidates]
    ok = all(lo - tol <= d <= hi + tol for d in radii)
    return CheckResult("window containment", ok, f"{len(radii)} radii in [{lo:.9g}, {hi:.9g}]")


def check_pullback(system, gap, samples=100, depth=12, seed=0, k=4) -> CheckResult:
    """Density intervals of ``(x, d)`` and ``(f_i x, r_i d)`` must overlap."""
    rng = np.random.default_rng(seed)
    pts = system.points(k)
    i = int(np.argmin(system.ratios))
    f = system.maps[i]
    c = system.exact_gap if system.exact_gap is not None else gap.c_tilde
    lo, _ = window(gap, system.r_min)
    hi = c / system.r_min
    s = system.s
    failures = 0
    for _ in range(samples):
        x = pts[rng.integers(len(pts))]
        d = float(rng.uniform(lo, hi))
        a = mu_ball_bounds(system, x, d, depth)
        b = mu_ball_bounds(system, f(x), d * f.ratio, depth)
        ia = ((2 * d) ** s / a.upper, math.inf if a.lower == 0 else (2 * d) ** s / a.lower)
        ib = ((2 * d * f.ratio) ** s / b.upper, math.inf if b.lower == 0 else (2 * d * f.ratio) ** s / b.lower)
        slack = 1e-12 * max(ia[0], ib[0])
        if ia[0] > ib[1] + slack or ib[0] > ia[1] + slack:
            failures += 1
    return CheckResult("pullback invariance", failures == 0, f"{failures} of {samples} samples disjoint")


def run_invariants(system: IFSSystem, k_max: int = 6, gap: GapEstimate | None = None,
                   samples: int = 100, seed: int = 0) -> list:
    """All reference-free checks on ``system`` up to generation ``k_max``."""
    if gap is None:
        gap = exact_gap(system) if system.exact_gap is not None else estimate_gap(system)
    states = list(generations(system, k_max))
    trace = run(system, gap, k_max, certify=False)
    return [
        check_mass(system, states),
        check_nesting(states),
        check_delta_monotone(states),
        check_gap_sandwich(system, k_max),
        check_brute_force(system, gap, trace, min(3, k_max)),
        check_pullback(system, gap, samples, seed=seed),
        check_window(system, gap, trace),
    ]
