"""Built-in self-similar families and their closed-form packing measures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .ifs import IFSSystem, Similitude, similarity_dimension

KINDS = ("sierpinski_gasket", "cantor_line", "cantor_plane", "regular_polygon")

# Upper ends of the ratio ranges where the closed form is backed by evidence.
GASKET_PROVED = 1.0 / 3.0
GASKET_CONJECTURED = 0.365
PLANE_PROVED = math.sqrt(2.0) / 4.0
PLANE_CONJECTURED = 0.35


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    r: float
    sides: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown family {self.kind!r}; expected one of {', '.join(KINDS)}")
        r = float(self.r)
        object.__setattr__(self, "r", r)
        if self.kind == "regular_polygon":
            if self.sides is None or int(self.sides) < 3:
                raise ValidationError("regular_polygon needs sides >= 3")
            object.__setattr__(self, "sides", int(self.sides))
            limit = 1.0 / self.sides
        else:
            if self.sides is not None:
                raise ValidationError(f"{self.kind} takes no sides parameter")
            limit = 0.5
        if not (math.isfinite(r) and 0.0 < r < limit):
            raise ValidationError(
                f"ratio {r} outside ({0}, {limit:g}); strong separation fails for {self.kind}")

    @property
    def N(self) -> int:
        return {"sierpinski_gasket": 3, "cantor_line": 2, "cantor_plane": 4}.get(self.kind, self.sides)


def polygon_vertices(sides: int) -> np.ndarray:
    """Vertices of a regular polygon centered at the origin with diameter 1."""
    angles = math.pi / 2 + 2 * math.pi * np.arange(sides) / sides
    unit = np.column_stack([np.cos(angles), np.sin(angles)])
    diameter = 2 * math.sin(math.pi * (sides // 2) / sides)
    return unit / diameter


def translations(spec: FamilySpec) -> np.ndarray:
    r = spec.r
    if spec.kind == "sierpinski_gasket":
        return np.array([[0.0, 0.0], [1 - r, 0.0], [(1 - r) / 2, (1 - r) * math.sqrt(3) / 2]])
    if spec.kind == "cantor_line":
        return np.array([[0.0], [1 - r]])
    if spec.kind == "cantor_plane":
        return np.array([[0.0, 0.0], [1 - r, 0.0], [1 - r, 1 - r], [0.0, 1 - r]])
    return (1 - r) * polygon_vertices(spec.sides)


def build(spec: FamilySpec) -> IFSSystem:
    """The family's homothety system; exact gap ``1 - 2r`` where it is known."""
    maps = tuple(Similitude.homothety(spec.r, b) for b in translations(spec))
    gap = None if spec.kind == "regular_polygon" else 1.0 - 2.0 * spec.r
    name = spec.kind if spec.sides is None else f"{spec.kind}_{spec.sides}"
    return IFSSystem(maps, exact_gap=gap, name=name)


@dataclass(frozen=True)
class OracleValue:
    value: float | None
    validity: str


def closed_form(spec: FamilySpec) -> float:
    """``(2 (1 - r) / r) ** s`` with the family's similarity dimension."""
    s = similarity_dimension([spec.r] * spec.N)
    return (2.0 * (1.0 - spec.r) / spec.r) ** s


def oracle(spec: FamilySpec) -> OracleValue:
    r = spec.r
    if spec.kind == "sierpinski_gasket":
        validity = ("proved" if r <= GASKET_PROVED else
                    "conjectured" if r <= GASKET_CONJECTURED else "out_of_range")
    elif spec.kind == "cantor_line":
        validity = "proved"
    elif spec.kind == "cantor_plane":
        validity = ("proved" if r < PLANE_PROVED else
                    "conjectured" if r <= PLANE_CONJECTURED else "out_of_range")
    else:
        validity = "conjectured"
    if validity == "out_of_range":
        return OracleValue(None, validity)
    return OracleValue(closed_form(spec), validity)


def verify_gasket_inequality(r: float, k_max: int = 30, grid: int = 1000,
                             rel_tol: float = 1e-12) -> bool:
    """Check the two scalar inequalities behind the gasket closed form.

    With ``s = log 3 / log(1/r)``: ``(1 + t/(1-r))**s <= 1 + 2 t**s`` at
    ``t = r**k`` for ``k = 1..k_max``, and the derivative comparison
    ``(1/(1-r)) (1/t + 1/(1-r))**(s-1) <= 2`` on a grid of ``(0, 1/3]``.
    """
    if not 0.0 < r < 0.5:
        raise ValueError("r must lie in (0, 1/2)")
    if grid < 10:
        raise ValueError("grid must have at least 10 points")
    s = math.log(3.0) / math.log(1.0 / r)
    q = 1.0 / (1.0 - r)
    for k in range(1, k_max + 1):
        t = r ** k
        lhs, rhs = (1.0 + t * q) ** s, 1.0 + 2.0 * t ** s
        if lhs > rhs * (1.0 + rel_tol):
            return False
    for j in range(1, grid + 1):
        t = j / (3.0 * grid)
        if q * (1.0 / t + q) ** (s - 1.0) > 2.0 * (1.0 + rel_tol):
            return False
    return True
