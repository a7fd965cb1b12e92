import math

import numpy as np
import pytest

from packing_measure.errors import ValidationError
from packing_measure.families import FamilySpec, build
from packing_measure.generation import GapEstimate, estimate_gap, exact_gap, generations
from packing_measure.ifs import IFSSystem, Similitude
from packing_measure.packing import (RunTrace, brute_force_maximum, effective_window, lower_bound, run,
                                     scan_all, scan_center, window)

from conftest import gasket

ROT = np.array([[0.6, -0.8], [0.8, 0.6]])
ROTATED = IFSSystem((
    Similitude(0.3, ROT, [0.0, 0.0]),
    Similitude(0.25, -np.eye(2), [1.0, 0.2]),
    Similitude(0.2, ROT.T, [0.3, 0.9]),
))


def test_window_examples():
    assert window(exact_gap(gasket(1 / 3)), 1 / 3) == pytest.approx((1 / 3, 1.0))
    line = build(FamilySpec("cantor_line", 0.25))
    assert window(exact_gap(line), 0.25) == pytest.approx((0.5, 2.0))
    est = estimate_gap(gasket(1 / 3), 6)
    lo, hi = window(est, 1 / 3)
    assert lo < 1 / 3 and hi == pytest.approx(3 * lo)
    with pytest.raises(ValidationError):
        window(GapEstimate(2, 0.1, -0.05, False), 0.3)


def test_scan_center_gasket_third():
    system = gasket(1 / 3)
    st = list(generations(system, 2))[-1]
    gap = exact_gap(system)
    res = scan_center(st.neighbors(0), gap, 1.0, 1 / 3)
    assert res.value == pytest.approx(4.0, abs=1e-12)
    assert res.radius == pytest.approx(2 / 3, abs=1e-15)
    assert st.address(res.witness) == (2, 1)


def test_scan_center_nothing_admissible():
    system = gasket(0.42)
    st = list(generations(system, 2))[-1]
    # The window is (0.16, 0.381] and the nearest neighbors of x1 in A_2 sit at 0.42.
    assert scan_center(st.neighbors(0), exact_gap(system), system.s, 0.42) is None


def test_scan_center_duplicates_in_planar_cantor():
    system = build(FamilySpec("cantor_plane", 0.25))
    st = list(generations(system, 2))[-1]
    nb = st.neighbors(0)
    res = scan_center(nb, exact_gap(system), 1.0, 0.25)
    # (3/4, 0) and (0, 3/4) tie at d = 3/4; the open ball keeps only the first cylinder.
    assert res.radius == 0.75 and res.value == pytest.approx(6.0)
    assert st.address(res.witness) == (2, 1)
    dist = np.linalg.norm(st.points - st.points[0], axis=1)
    assert np.sum(dist == 0.75) == 2
    assert st.weights[dist < 0.75].sum() == pytest.approx(0.25)


@pytest.mark.parametrize("system,k", [(ROTATED, 6), (gasket(0.3), 6), (build(FamilySpec("cantor_plane", 0.3)), 5),
                                      (build(FamilySpec("regular_polygon", 0.15, 5)), 5)])
@pytest.mark.parametrize("eps", [0.0, 1e-12])
def test_kernels_agree(system, k, eps):
    gap = exact_gap(system) if system.exact_gap else estimate_gap(system, 6)
    lo, hi = effective_window(gap, system.r_min)
    st = list(generations(system, k))[-1]
    vb, db, wb = scan_all(st, system.s, lo, hi, eps, kernel="bucketed")
    vs, ds, ws = scan_all(st, system.s, lo, hi, eps, kernel="sorted")
    assert np.allclose(vb, vs, rtol=1e-12, atol=0)
    for i in np.linspace(0, st.size - 1, 25).astype(int):
        ref = scan_center(st.neighbors(int(i), hi), gap, system.s, system.r_min, eps)
        if ref is None:
            assert vb[i] == -1.0
        else:
            assert vb[i] == pytest.approx(ref.value, rel=1e-12)
            assert db[i] == pytest.approx(ref.radius, abs=1e-12)


@pytest.mark.parametrize("system", [gasket(1 / 3), gasket(0.42), ROTATED, build(FamilySpec("cantor_line", 0.3))])
def test_brute_force_agreement(system):
    gap = exact_gap(system) if system.exact_gap else estimate_gap(system, 8)
    trace = run(system, gap, 3, certify=False)
    for st, res in zip(generations(system, 3), trace.results):
        ref = brute_force_maximum(st, gap, system.s, system.r_min, trace.eps)
        if ref is None:
            assert res.m_tilde is None
        else:
            assert res.m_tilde == pytest.approx(ref, rel=1e-12)


def test_run_gasket_third():
    trace = run(gasket(1 / 3), exact_gap(gasket(1 / 3)), 6)
    first = trace.results[0]
    assert first.m_tilde == pytest.approx(6.0) and not first.certified
    for g in trace.results[1:]:
        assert g.m_tilde == pytest.approx(4.0, abs=1e-9)
        assert [c.key for c in g.candidates] == [((1,), (2, 1)), ((2,), (1, 2)), ((3,), (1, 3))]
        assert all(c.radius == pytest.approx(2 / 3, abs=1e-12) and c.certified for c in g.candidates)
    assert [g.stable for g in trace.results] == [False, False, True, True, True, True]
    assert trace.stable
    assert lower_bound(trace) == pytest.approx(4.0, abs=1e-9)


def test_run_gasket_037():
    trace = run(gasket(0.37), exact_gap(gasket(0.37)), 6)
    values = [g.m_tilde for g in trace.results]
    assert values[0] is None
    assert values[1] == pytest.approx(6.4528022615830825, rel=1e-12)
    for v in values[2:]:
        assert v == pytest.approx(3.8728174374540574, rel=1e-12)
    best = trace.final.candidates[0]
    assert best.key == ((1,), (2, 1)) and best.radius == pytest.approx(0.63, abs=1e-12)


def test_run_gasket_042_drift():
    trace = run(gasket(0.42), exact_gap(gasket(0.42)), 7)
    frozen = [None, None, 7.216871324980088, 3.659900236826284, 3.6705082930962214,
              3.658306948138598, 3.64297340225133]
    for g, v in zip(trace.results, frozen):
        if v is None:
            assert g.m_tilde is None and g.candidates == ()
        else:
            assert g.m_tilde == pytest.approx(v, rel=1e-11)
    assert trace.results[2].candidates[0].radius == pytest.approx(0.42 ** 2, abs=1e-12)
    assert not trace.stable
    assert lower_bound(trace) is None


def test_ties_sorted_and_within_tolerance():
    trace = run(build(FamilySpec("cantor_plane", 0.25)), exact_gap(build(FamilySpec("cantor_plane", 0.25))), 4)
    for g in trace.results:
        keys = [(c.center_address, c.witness_address) for c in g.candidates]
        assert keys == sorted(keys)
        assert all(c.value >= g.m_tilde * (1 - 1e-9) for c in g.candidates)
        assert all(c.value == pytest.approx((2 * c.radius) ** 1.0 / c.ball_mass, rel=1e-15)
                   for c in g.candidates)


def test_deterministic_runs():
    a = run(ROTATED, estimate_gap(ROTATED, 7), 5)
    b = run(ROTATED, estimate_gap(ROTATED, 7), 5)
    assert [(g.m_tilde, g.candidates) for g in a.results] == [(g.m_tilde, g.candidates) for g in b.results]


def test_window_containment_and_estimated_gap():
    system = gasket(0.3)
    gap = estimate_gap(system, 7)
    trace = run(system, gap, 6)
    lo, hi = window(gap, system.r_min)
    for g in trace.results:
        for c in g.candidates:
            assert lo - 1e-12 <= c.radius <= hi + 1e-12
    assert trace.final.m_tilde == pytest.approx((2 * 0.7 / 0.3) ** system.s, rel=1e-9)


def test_lower_bound_empty_and_errors():
    with pytest.raises(ValueError):
        lower_bound(RunTrace(gasket(0.3), exact_gap(gasket(0.3)), 1e-9, 0.0))
    with pytest.raises(ValidationError):
        run(gasket(0.3), exact_gap(gasket(0.3)), 0)
