"""Shapes, pair validation, the interleaved comb construction and uniform sampling.

All shapes are closed sets described by their closures; two shapes may touch
on faces (the comb does) but their interiors must never intersect.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

# interval overlaps shorter than this are treated as face contact
OVERLAP_TOL = 1e-12
VOLUME_RTOL = 1e-9
UNIT_TOL = 1e-12


class GeometryError(ValueError):
    """Invalid shape, pair or comb parameters."""


class DomainError(ValueError):
    """Numerical quantity undefined for the given input (e.g. overlapping bodies)."""


def _point(p: Sequence[float], name: str = "point") -> tuple[float, float, float]:
    try:
        x, y, z = (float(c) for c in p)
    except (TypeError, ValueError) as exc:
        raise GeometryError(f"{name} must be three real numbers, got {p!r}") from exc
    if not all(math.isfinite(c) for c in (x, y, z)):
        raise GeometryError(f"{name} has non-finite coordinates: {p!r}")
    return (x, y, z)


@dataclass(frozen=True)
class AxisBox:
    xlo: float
    xhi: float
    ylo: float
    yhi: float
    zlo: float
    zhi: float

    def __post_init__(self):
        b = self.bounds
        if not all(math.isfinite(v) for v in b):
            raise GeometryError(f"box has non-finite bounds: {b}")
        for lo, hi, ax in zip(b[0::2], b[1::2], "xyz"):
            if not lo < hi:
                raise GeometryError(f"box needs {ax}lo < {ax}hi, got [{lo}, {hi}]")

    @classmethod
    def from_corners(cls, lo: Sequence[float], hi: Sequence[float]) -> "AxisBox":
        lo = _point(lo, "min")
        hi = _point(hi, "max")
        return cls(lo[0], hi[0], lo[1], hi[1], lo[2], hi[2])

    @property
    def bounds(self) -> tuple[float, float, float, float, float, float]:
        return (self.xlo, self.xhi, self.ylo, self.yhi, self.zlo, self.zhi)

    @property
    def lo(self) -> np.ndarray:
        return np.array([self.xlo, self.ylo, self.zlo])

    @property
    def hi(self) -> np.ndarray:
        return np.array([self.xhi, self.yhi, self.zhi])

    @property
    def volume(self) -> float:
        return (self.xhi - self.xlo) * (self.yhi - self.ylo) * (self.zhi - self.zlo)

    def translated(self, offset: Sequence[float]) -> "AxisBox":
        dx, dy, dz = offset
        return AxisBox(self.xlo + dx, self.xhi + dx, self.ylo + dy, self.yhi + dy,
                       self.zlo + dz, self.zhi + dz)

    def scaled(self, s: float) -> "AxisBox":
        return AxisBox(*(s * v for v in self.bounds))


def _interiors_overlap(lo1, hi1, lo2, hi2) -> np.ndarray:
    """Boolean array: do the open boxes intersect (overlap > tol on every axis)?"""
    overlap = np.minimum(hi1, hi2) - np.maximum(lo1, lo2)
    return np.all(overlap > OVERLAP_TOL, axis=-1)


def _as_arrays(boxes: Sequence[AxisBox]) -> tuple[np.ndarray, np.ndarray]:
    b = np.array([bx.bounds for bx in boxes], dtype=float).reshape(-1, 6)
    return b[:, 0::2], b[:, 1::2]


@dataclass(frozen=True)
class BoxUnion:
    boxes: tuple[AxisBox, ...]

    def __post_init__(self):
        boxes = tuple(self.boxes)
        if not boxes:
            raise GeometryError("box union needs at least one box")
        if not all(isinstance(b, AxisBox) for b in boxes):
            raise GeometryError("box union members must be AxisBox instances")
        object.__setattr__(self, "boxes", boxes)
        if len(boxes) > 1:
            lo, hi = _as_arrays(boxes)
            hit = _interiors_overlap(lo[:, None, :], hi[:, None, :], lo[None, :, :], hi[None, :, :])
            np.fill_diagonal(hit, False)
            if hit.any():
                i, j = np.argwhere(hit)[0]
                raise GeometryError(f"boxes {i} and {j} of the union overlap")

    @property
    def volume(self) -> float:
        return math.fsum(b.volume for b in self.boxes)

    def bounds_array(self) -> np.ndarray:
        return np.array([b.bounds for b in self.boxes], dtype=float)


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center, "center"))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"sphere radius must be positive, got {self.radius}")

    @property
    def volume(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius**3


@dataclass(frozen=True)
class CylinderZ:
    """Cylinder with its axis along z; ``center`` is the centroid."""

    center: tuple[float, float, float]
    radius: float
    height: float

    def __post_init__(self):
        object.__setattr__(self, "center", _point(self.center, "center"))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError(f"cylinder radius must be positive, got {self.radius}")
        if not (math.isfinite(self.height) and self.height > 0):
            raise GeometryError(f"cylinder height must be positive, got {self.height}")

    @property
    def zlo(self) -> float:
        return self.center[2] - 0.5 * self.height

    @property
    def zhi(self) -> float:
        return self.center[2] + 0.5 * self.height

    @property
    def volume(self) -> float:
        return math.pi * self.radius**2 * self.height


Shape = Union[BoxUnion, Sphere, CylinderZ]


def volume(shape: Shape) -> float:
    return shape.volume


# -- separation ----------------------------------------------------------------

@dataclass(frozen=True)
class Separated:
    gap: float


@dataclass(frozen=True)
class Touching:
    pass


@dataclass(frozen=True)
class Overlapping:
    pass


SeparationClass = Union[Separated, Touching, Overlapping]


def _interval_gap(lo1, hi1, lo2, hi2):
    return np.maximum(0.0, np.maximum(lo1 - hi2, lo2 - hi1))


def _point_rect_distance(p, lo, hi):
    """Distance from points p (..., k) to axis-aligned boxes [lo, hi] in k dims."""
    d = np.maximum(0.0, np.maximum(lo - p, p - hi))
    return np.sqrt(np.sum(d * d, axis=-1))


# Every primitive is a product (planar convex set) x (z interval), or a ball.
# Distances between products split into a planar part and a z part.

def _box_box(a: BoxUnion, b: BoxUnion) -> tuple[float, bool]:
    alo, ahi = _as_arrays(a.boxes)
    blo, bhi = _as_arrays(b.boxes)
    gap = _interval_gap(alo[:, None, :], ahi[:, None, :], blo[None, :, :], bhi[None, :, :])
    dist = np.sqrt(np.sum(gap * gap, axis=-1))
    overlap = _interiors_overlap(alo[:, None, :], ahi[:, None, :], blo[None, :, :], bhi[None, :, :])
    return float(dist.min()), bool(overlap.any())


def _box_sphere(a: BoxUnion, s: Sphere) -> tuple[float, bool]:
    lo, hi = _as_arrays(a.boxes)
    d = _point_rect_distance(np.asarray(s.center), lo, hi)
    return max(0.0, float(d.min()) - s.radius), bool((d < s.radius - OVERLAP_TOL).any())


def _box_cylinder(a: BoxUnion, c: CylinderZ) -> tuple[float, bool]:
    lo, hi = _as_arrays(a.boxes)
    planar = np.maximum(0.0, _point_rect_distance(np.asarray(c.center[:2]), lo[:, :2], hi[:, :2]) - c.radius)
    zgap = _interval_gap(lo[:, 2], hi[:, 2], c.zlo, c.zhi)
    dist = np.hypot(planar, zgap)
    plane_in = _point_rect_distance(np.asarray(c.center[:2]), lo[:, :2], hi[:, :2]) < c.radius - OVERLAP_TOL
    z_in = np.minimum(hi[:, 2], c.zhi) - np.maximum(lo[:, 2], c.zlo) > OVERLAP_TOL
    return float(dist.min()), bool((plane_in & z_in).any())


def _sphere_sphere(s: Sphere, t: Sphere) -> tuple[float, bool]:
    d = math.dist(s.center, t.center)
    return max(0.0, d - s.radius - t.radius), d < s.radius + t.radius - OVERLAP_TOL


def _point_cylinder_distance(p, c: CylinderZ) -> float:
    radial = max(0.0, math.hypot(p[0] - c.center[0], p[1] - c.center[1]) - c.radius)
    zgap = max(0.0, c.zlo - p[2], p[2] - c.zhi)
    return math.hypot(radial, zgap)


def _sphere_cylinder(s: Sphere, c: CylinderZ) -> tuple[float, bool]:
    d = _point_cylinder_distance(s.center, c)
    return max(0.0, d - s.radius), d < s.radius - OVERLAP_TOL


def _cylinder_cylinder(c: CylinderZ, e: CylinderZ) -> tuple[float, bool]:
    planar_d = math.hypot(c.center[0] - e.center[0], c.center[1] - e.center[1])
    planar = max(0.0, planar_d - c.radius - e.radius)
    zgap = max(0.0, c.zlo - e.zhi, e.zlo - c.zhi)
    z_in = min(c.zhi, e.zhi) - max(c.zlo, e.zlo) > OVERLAP_TOL
    return math.hypot(planar, zgap), (planar_d < c.radius + e.radius - OVERLAP_TOL) and z_in


_ORDER = {BoxUnion: 0, Sphere: 1, CylinderZ: 2}
_DISTANCE = {
    (BoxUnion, BoxUnion): _box_box,
    (BoxUnion, Sphere): _box_sphere,
    (BoxUnion, CylinderZ): _box_cylinder,
    (Sphere, Sphere): _sphere_sphere,
    (Sphere, CylinderZ): _sphere_cylinder,
    (CylinderZ, CylinderZ): _cylinder_cylinder,
}


def separation_class(a: Shape, b: Shape) -> SeparationClass:
    """Classify two shapes as separated (with the closure gap), touching or overlapping."""
    if _ORDER[type(a)] > _ORDER[type(b)]:
        a, b = b, a
    gap, overlap = _DISTANCE[(type(a), type(b))](a, b)
    if overlap:
        return Overlapping()
    if gap > 0.0:
        return Separated(gap)
    return Touching()


# -- pairs -----------------------------------------------------------------------

@dataclass(frozen=True)
class GeometryPair:
    """Two equal-volume shapes with disjoint interiors and an oscillation direction.

    Any nonzero ``direction`` is normalized on construction.
    """

    A: Shape
    B: Shape
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    separation: SeparationClass = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = np.array(_point(self.direction, "direction"))
        norm = float(np.linalg.norm(n))
        if norm == 0.0:
            raise GeometryError("direction must be nonzero")
        n = n / norm
        if abs(float(np.linalg.norm(n)) - 1.0) > UNIT_TOL:
            raise GeometryError("direction could not be normalized")
        object.__setattr__(self, "direction", tuple(float(c) for c in n))
        va, vb = self.A.volume, self.B.volume
        if abs(va - vb) > VOLUME_RTOL * max(va, vb):
            raise GeometryError(f"volumes differ: {va!r} vs {vb!r}")
        sep = separation_class(self.A, self.B)
        if isinstance(sep, Overlapping):
            raise GeometryError("shapes A and B overlap")
        object.__setattr__(self, "separation", sep)

    @property
    def volume(self) -> float:
        return self.A.volume

    @property
    def n(self) -> np.ndarray:
        return np.array(self.direction)

    def axis(self) -> int | None:
        """Index of the coordinate axis parallel to the direction, or None if oblique."""
        n = np.abs(self.n)
        k = int(np.argmax(n))
        if abs(n[k] - 1.0) <= UNIT_TOL:
            return k
        return None

    def swapped(self) -> "GeometryPair":
        return GeometryPair(self.B, self.A, self.direction)


# -- comb --------------------------------------------------------------------------

@dataclass(frozen=True)
class CombParams:
    H: float
    h: float
    N: int

    def __post_init__(self):
        if not (math.isfinite(self.H) and self.H > 0):
            raise GeometryError(f"comb tooth height H must be positive, got {self.H}")
        if not (math.isfinite(self.h) and self.h > 0):
            raise GeometryError(f"comb slab thickness h must be positive, got {self.h}")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise GeometryError(f"comb tooth count N must be a positive integer, got {self.N}")
        object.__setattr__(self, "N", int(self.N))


def comb_teeth(p: CombParams, side: str) -> list[AxisBox]:
    N, H = p.N, p.H
    if side == "A":
        return [AxisBox((2 * i - 2) / (2 * N), (2 * i - 1) / (2 * N), 0.0, 1.0, 0.0, H)
                for i in range(1, N + 1)]
    if side == "B":
        return [AxisBox((2 * j - 1) / (2 * N), (2 * j) / (2 * N), 0.0, 1.0, 0.0, H)
                for j in range(1, N + 1)]
    raise GeometryError(f"comb side must be 'A' or 'B', got {side!r}")


def comb_base(p: CombParams) -> AxisBox:
    return AxisBox(0.0, 1.0, 0.0, 1.0, -p.h, 0.0)


def comb_cap(p: CombParams) -> AxisBox:
    return AxisBox(0.0, 1.0, 0.0, 1.0, p.H, p.H + p.h)


def comb_side(p: CombParams, side: str) -> BoxUnion:
    slab = comb_base(p) if side == "A" else comb_cap(p)
    return BoxUnion(tuple(comb_teeth(p, side)) + (slab,))


def build_comb(p: CombParams) -> GeometryPair:
    """Interleaved-teeth pair: A's teeth sit on a base slab, B's hang from a cap slab."""
    return GeometryPair(comb_side(p, "A"), comb_side(p, "B"), (0.0, 0.0, 1.0))


# -- sampling ----------------------------------------------------------------------

def sample_uniform(shape: Shape, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw points uniformly from the volume of ``shape``.

    Returns an array of shape ``(3,)`` when ``size`` is None, else ``(size, 3)``.
    """
    n = 1 if size is None else int(size)
    if isinstance(shape, BoxUnion):
        b = shape.bounds_array()
        if len(b) == 1:
            idx = np.zeros(n, dtype=np.intp)
        else:
            vols = np.array([bx.volume for bx in shape.boxes])
            idx = rng.choice(len(b), size=n, p=vols / vols.sum())
        lo, hi = b[idx, 0::2], b[idx, 1::2]
        pts = lo + (hi - lo) * rng.random((n, 3))
    elif isinstance(shape, Sphere):
        g = rng.standard_normal((n, 3))
        norm = np.linalg.norm(g, axis=1, keepdims=True)
        g = np.where(norm > 0, g / np.where(norm > 0, norm, 1.0), [0.0, 0.0, 1.0])
        r = shape.radius * np.cbrt(rng.random((n, 1)))
        pts = np.asarray(shape.center) + r * g
    elif isinstance(shape, CylinderZ):
        u = rng.random((n, 3))
        r = shape.radius * np.sqrt(u[:, 0])
        th = 2.0 * np.pi * u[:, 1]
        cx, cy, _ = shape.center
        pts = np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th),
                               shape.zlo + shape.height * u[:, 2]])
    else:
        raise TypeError(f"not a shape: {shape!r}")
    return pts[0] if size is None else pts
