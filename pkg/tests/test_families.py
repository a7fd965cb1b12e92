import math

import numpy as np
import pytest

from packing_measure.errors import ValidationError
from packing_measure.families import FamilySpec, build, closed_form, oracle, verify_gasket_inequality
from packing_measure.generation import estimate_gap
from packing_measure.ifs import diameter_check
from packing_measure.measure import mu_ball_bounds


def test_build_gasket():
    system = build(FamilySpec("sierpinski_gasket", 1 / 3))
    assert system.N == 3 and system.homogeneous
    assert all(np.array_equal(f.orthogonal, np.eye(2)) for f in system.maps)
    assert np.allclose(system.fixed_points, [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]], atol=1e-15)
    assert system.exact_gap == pytest.approx(1 / 3)


def test_build_cantor_plane_translations():
    r = 0.25
    system = build(FamilySpec("cantor_plane", r))
    expected = [(0, 0), (1 - r, 0), (1 - r, 1 - r), (0, 1 - r)]
    assert [tuple(f.translation) for f in system.maps] == expected
    assert system.exact_gap == 0.5


def test_build_cantor_line():
    system = build(FamilySpec("cantor_line", 0.25))
    assert [tuple(f.translation) for f in system.maps] == [(0.0,), (0.75,)]
    assert system.s == pytest.approx(0.5)


@pytest.mark.parametrize("kind,r,sides", [("cantor_line", 0.5, None), ("sierpinski_gasket", 0.5, None),
                                          ("cantor_plane", 0.0, None), ("regular_polygon", 0.2, 5),
                                          ("regular_polygon", 0.1, 2), ("koch", 0.3, None),
                                          ("cantor_line", 0.3, 4)])
def test_invalid_specs(kind, r, sides):
    with pytest.raises(ValidationError):
        FamilySpec(kind, r, sides)


def test_polygon_is_normalized_and_separated():
    for sides, r in [(4, 0.2), (5, 0.15), (6, 0.1)]:
        system = build(FamilySpec("regular_polygon", r, sides))
        assert system.exact_gap is None
        assert np.allclose(np.linalg.norm(system.fixed_points, axis=1),
                           np.linalg.norm(system.fixed_points[0]), atol=1e-15)
        assert 1.0 in diameter_check(system, 4)
        assert estimate_gap(system, 5).positive


@pytest.mark.parametrize("kind", ["sierpinski_gasket", "cantor_line", "regular_polygon"])
@pytest.mark.parametrize("r", [0.05, 0.1, 0.15, 0.2])
def test_families_are_normalized(kind, r):
    spec = FamilySpec(kind, r, 4 if kind == "regular_polygon" else None)
    assert diameter_check(build(spec), 4).normalized


def test_cantor_plane_uses_unit_square():
    # The closed form is stated for the unit-square construction, whose diameter is sqrt 2.
    enc = diameter_check(build(FamilySpec("cantor_plane", 0.25)), 5)
    assert enc.lo == pytest.approx(math.sqrt(2))
    assert not enc.normalized


def test_oracle_examples():
    o = oracle(FamilySpec("sierpinski_gasket", 1 / 3))
    assert o.value == pytest.approx(4.0, abs=1e-14) and o.validity == "proved"
    o = oracle(FamilySpec("sierpinski_gasket", 1 / 27))
    assert o.value == pytest.approx(52 ** (1 / 3), rel=1e-14) and o.validity == "proved"
    assert o.value == pytest.approx(3.7325, abs=5e-5)
    o = oracle(FamilySpec("cantor_line", 0.25))
    assert o.value == pytest.approx(math.sqrt(6), rel=1e-14) and o.validity == "proved"
    assert oracle(FamilySpec("cantor_line", 0.45)).validity == "proved"
    assert oracle(FamilySpec("cantor_plane", 0.25)).value == pytest.approx(6.0)


@pytest.mark.parametrize("spec,validity", [
    (FamilySpec("sierpinski_gasket", 0.3), "proved"),
    (FamilySpec("sierpinski_gasket", 0.36), "conjectured"),
    (FamilySpec("sierpinski_gasket", 0.37), "out_of_range"),
    (FamilySpec("cantor_plane", 0.2), "proved"),
    (FamilySpec("cantor_plane", 0.3), "proved"),
    (FamilySpec("cantor_plane", 0.36), "out_of_range"),
    (FamilySpec("regular_polygon", 0.1, 5), "conjectured"),
])
def test_oracle_validity(spec, validity):
    o = oracle(spec)
    assert o.validity == validity
    assert (o.value is None) == (validity == "out_of_range")


def test_gasket_oracle_continuous_and_unimodal():
    # Rises from 3.53 at r = 0.01 to about 4.14 near r = 0.22, then falls to 4 at r = 1/3.
    rs = np.linspace(0.01, 1 / 3, 400)
    values = np.array([closed_form(FamilySpec("sierpinski_gasket", r)) for r in rs])
    steps = np.diff(values)
    assert np.max(np.abs(steps)) < 0.01
    signs = np.sign(steps)
    assert np.count_nonzero(signs[1:] != signs[:-1]) == 1
    assert 0.2 < rs[np.argmax(values)] < 0.25


@pytest.mark.parametrize("r", [1 / 3, 0.25, 0.2, 1 / 27])
def test_oracle_matches_vertex_ball(r):
    system = build(FamilySpec("sierpinski_gasket", r))
    b = mu_ball_bounds(system, system.fixed_points[0], 1 - r)
    lo, hi = (2 * (1 - r)) ** system.s / b.upper, (2 * (1 - r)) ** system.s / b.lower
    value = oracle(FamilySpec("sierpinski_gasket", r)).value
    assert lo * (1 - 1e-12) <= value <= hi * (1 + 1e-12)


def test_gasket_inequality():
    assert verify_gasket_inequality(1 / 3)
    assert verify_gasket_inequality(0.25)
    # Beyond the proved range the derivative comparison fails near t = 0.
    assert not verify_gasket_inequality(0.45)
    with pytest.raises(ValueError):
        verify_gasket_inequality(0.3, grid=5)
