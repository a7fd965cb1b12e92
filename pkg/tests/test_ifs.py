import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from packing_measure.errors import ValidationError
from packing_measure.families import FamilySpec, build
from packing_measure.ifs import (IFSSystem, Similitude, address_of, apply, canonical_address, compose,
                                 diameter_check, fixed_point, format_address, index_of,
                                 similarity_dimension)

from conftest import gasket, golden_y

ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


def test_apply_homothety():
    f = Similitude.homothety(1 / 3, [0.0, 0.0])
    assert np.allclose(apply(f, [1.0, 0.0]), [1 / 3, 0.0], atol=1e-15)


def test_apply_gasket_second_map():
    f2 = gasket(1 / 3).maps[1]
    assert np.allclose(f2([0.0, 0.0]), [2 / 3, 0.0], atol=1e-15)


def test_apply_rotation():
    f = Similitude(0.5, ROT90, [1.0, 0.0])
    assert np.allclose(f([0.0, 1.0]), [0.5, 0.0], atol=1e-15)


def test_apply_dimension_mismatch():
    with pytest.raises(ValidationError):
        apply(Similitude.homothety(0.5, [0.0, 0.0]), [1.0])


def test_rejects_non_orthogonal_and_bad_ratio():
    with pytest.raises(ValidationError):
        Similitude(0.5, [[1.0, 0.1], [0.0, 1.0]], [0.0, 0.0])
    with pytest.raises(ValidationError):
        Similitude(1.5, np.eye(1), [0.0])
    with pytest.raises(ValidationError):
        Similitude(0.0, np.eye(1), [0.0])
    with pytest.raises(ValidationError):
        IFSSystem((Similitude.homothety(0.5, [0.0]),))
    with pytest.raises(ValidationError):
        IFSSystem((Similitude.homothety(0.5, [0.0]), Similitude.homothety(0.5, [0.0, 1.0])))


def test_compose_empty_is_identity(gasket_third):
    f = compose(gasket_third, ())
    assert f.ratio == 1.0
    assert np.array_equal(f([0.3, 0.4]), [0.3, 0.4])


def test_compose_gasket_12(gasket_third):
    assert np.allclose(compose(gasket_third, (1, 2))([0.0, 0.0]), [2 / 9, 0.0], atol=1e-15)


def test_compose_ratio_product(gasket_third):
    assert math.isclose(compose(gasket_third, (3, 1, 2, 2)).ratio, 3.0 ** -4, rel_tol=1e-15)


def test_compose_invalid_digit(gasket_third):
    with pytest.raises(ValidationError):
        compose(gasket_third, (1, 4))
    with pytest.raises(ValidationError):
        compose(gasket_third, (0,))


ROTATED = IFSSystem((
    Similitude(0.3, ROT90, [0.0, 0.0]),
    Similitude(0.25, -np.eye(2), [1.0, 0.2]),
    Similitude(0.2, ROT90.T, [0.3, 0.9]),
))
addresses = st.lists(st.integers(1, 3), max_size=6).map(tuple)


@settings(max_examples=60, deadline=None)
@given(addresses, addresses, st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_compose_concatenation(w1, w2, x):
    lhs = compose(ROTATED, w1 + w2)(x)
    rhs = compose(ROTATED, w1)(compose(ROTATED, w2)(x))
    assert np.allclose(lhs, rhs, atol=1e-12, rtol=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2), st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_apply_scales_distances(i, xy):
    f = ROTATED.maps[i]
    x, y = np.array(xy[:2]), np.array(xy[2:])
    assert math.isclose(np.linalg.norm(f(x) - f(y)), f.ratio * np.linalg.norm(x - y),
                        rel_tol=1e-12, abs_tol=1e-15)


def test_fixed_points():
    assert np.array_equal(fixed_point(Similitude.homothety(1 / 3, [0.0, 0.0])), [0.0, 0.0])
    for r in (0.1, 0.25, 0.4):
        assert np.allclose(gasket(r).fixed_points, [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]], atol=1e-15)
    f = Similitude(0.5, ROT90, [1.0, 0.0])
    x = fixed_point(f)
    assert np.allclose(x, [0.8, 0.4], atol=1e-15)  # (I - R/2) x = (1, 0)
    assert np.max(np.abs(f(x) - x)) <= 1e-12


@pytest.mark.parametrize("kind,r", [("sierpinski_gasket", 0.3), ("cantor_line", 0.2),
                                    ("cantor_plane", 0.35), ("sierpinski_gasket", 1 / 27)])
def test_fixed_point_residuals(kind, r):
    system = build(FamilySpec(kind, r))
    for f, x in zip(system.maps, system.fixed_points):
        assert np.max(np.abs(f(x) - x)) <= 1e-12


def test_similarity_dimension_examples():
    assert similarity_dimension([1 / 3] * 3) == pytest.approx(1.0, abs=1e-15)
    assert similarity_dimension([0.25] * 3) == pytest.approx(math.log(3) / math.log(4), abs=1e-15)
    s = similarity_dimension([0.5, 0.25])
    assert s == pytest.approx(0.6942419, abs=1e-7)
    # y + y^2 = 1 with y = (1/2)^s
    assert s == pytest.approx(math.log(golden_y()) / math.log(0.5), abs=1e-13)


@pytest.mark.parametrize("ratios", [[0.5, 0.25], [0.1, 0.2, 0.3], [0.45, 0.45, 0.05], [0.3] * 4])
def test_similarity_dimension_root(ratios):
    s = similarity_dimension(ratios, dimension=2)
    assert abs(sum(r ** s for r in ratios) - 1.0) <= 1e-12


@pytest.mark.parametrize("r,N", [(1 / 3, 3), (0.2, 4), (0.37, 3), (0.05, 2)])
def test_bisection_matches_closed_form(r, N):
    closed = similarity_dimension([r] * N)
    assert closed == math.log(N) / math.log(1 / r)
    assert abs(similarity_dimension([r] * N, closed_form=False) - closed) <= 1e-13


def test_diameter_check():
    for r in (0.1, 0.25, 1 / 3, 0.45):
        assert 1.0 in diameter_check(gasket(r), 3)
        assert diameter_check(gasket(r), 3).normalized
    line = build(FamilySpec("cantor_line", 0.25))
    enc = diameter_check(line, 5)
    assert 1.0 in enc and enc.lo == 1.0
    big = IFSSystem(tuple(Similitude.homothety(f.ratio, 2 * f.translation) for f in gasket(0.3).maps))
    enc = diameter_check(big, 3)
    assert 1.0 not in enc and not enc.normalized
    assert enc.lo == pytest.approx(2.0)


def test_addresses_round_trip():
    for j in range(27):
        a = address_of(j, 3, 3)
        assert index_of(a, 3) == j
    assert address_of(5, 3, 3) == (1, 2, 3)
    assert canonical_address((2, 1, 1, 1)) == (2, 1)
    assert canonical_address((1, 1)) == (1,)
    assert canonical_address(()) == ()
    assert format_address((1, 2, 1)) == "121"
    assert format_address((1, 12), N=12) == "1.12"


def test_diameter_bound_unnormalized():
    plane = build(FamilySpec("cantor_plane", 0.25))
    slack = 1 / (1 - 2 * 0.25 ** 6)
    assert math.sqrt(2) <= plane.diameter_bound <= math.sqrt(2) * slack * (1 + 1e-12)
    assert plane.diameter_scale == plane.diameter_bound
    center, radius = plane.enclosing_ball
    for corner in ([0, 0], [1, 0], [1, 1], [0, 1]):
        assert np.linalg.norm(np.array(corner) - center) <= radius


def test_diameter_scale_normalized(gasket_third):
    assert gasket_third.diameter_scale == 1.0
    assert 1.0 <= gasket_third.diameter_bound < 1.001
