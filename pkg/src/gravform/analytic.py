"""Closed-form evaluation of the form factor for box unions, combs, slabs and spheres.

Signed integrals use the kernel orientation ``(2dz^2 - dx^2 - dy^2) / |s|^5``,
which is positive for bodies separated along the oscillation axis. Form
factors are absolute values of these integrals divided by the body volume.

The six-fold box-pair integral is a mixed second difference of the
antiderivative ``eval_F`` over all three coordinate differences (64 terms).
For boxes that are small compared with their distance this difference cancels
catastrophically; every evaluation carries a rounding-error bound, and pairs
whose bound is too large relative to the requested result are recomputed in
multiprecision arithmetic.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from .geometry import (AxisBox, BoxUnion, CombParams, DomainError, GeometryPair,
                       OVERLAP_TOL, comb_base, comb_cap, comb_teeth)

TWO_PI = 2.0 * math.pi
_EPS = np.finfo(float).eps
# heuristic rounding-error factor per F evaluation (input differences + 4 subterms)
_ERR_FACTOR = 16.0
_CHUNK_PAIRS = 4096
_MAX_REFINE = 4096
_AXES = {"x": 0, "y": 1, "z": 2, "X": 0, "Y": 1, "Z": 2}
# columns of a (xlo, xhi, ylo, yhi, zlo, zhi) row after rotating `axis` onto z
_PERMUTE = {0: [2, 3, 4, 5, 0, 1], 1: [4, 5, 0, 1, 2, 3], 2: [0, 1, 2, 3, 4, 5]}
_SIGN4 = np.array([1.0, -1.0, -1.0, 1.0])
_SIGN64 = (_SIGN4[:, None, None] * _SIGN4[None, :, None] * _SIGN4[None, None, :])


def _axis_index(axis) -> int:
    if isinstance(axis, str):
        try:
            return _AXES[axis]
        except KeyError:
            raise ValueError(f"unknown axis {axis!r}") from None
    if axis in (0, 1, 2):
        return int(axis)
    raise ValueError(f"unknown axis {axis!r}")


def _atanh_ratio(x, rho, r):
    # atanh(x / r) with r = hypot(x, rho), written so x/r -> 1 does not overflow
    return np.sign(x) * np.log((r + np.abs(x)) / rho)


def _F_parts(x, y, z):
    """Return (F, sum of |subterms|) with removable 0*inf terms set to zero."""
    x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))
    x2, y2, z2 = x * x, y * y, z * z
    r = np.sqrt(x2 + y2 + z2)
    t1 = (x2 + y2 - 2.0 * z2) / 6.0 * r
    p2 = 0.5 * x * (z2 - y2)
    p3 = 0.5 * y * (z2 - x2)
    p4 = x * y * z
    with np.errstate(divide="ignore", invalid="ignore"):
        t2 = np.where(p2 != 0.0, p2 * _atanh_ratio(x, np.hypot(y, z), r), 0.0)
        t3 = np.where(p3 != 0.0, p3 * _atanh_ratio(y, np.hypot(x, z), r), 0.0)
        t4 = np.where(p4 != 0.0, p4 * np.arctan(x * y / (z * r)), 0.0)
    value = t1 + t2 + t3 + t4
    mag = np.abs(t1) + np.abs(t2) + np.abs(t3) + np.abs(t4)
    return value, mag


def eval_F(x, y, z):
    """Antiderivative whose mixed difference over box limits gives the pair integral.

    F = (x^2+y^2-2z^2)/6 r + x(z^2-y^2)/2 atanh(x/r) + y(z^2-x^2)/2 atanh(y/r)
        + xyz atan(xy/(z r)),   r = sqrt(x^2+y^2+z^2).

    Accepts scalars or broadcastable arrays; returns a float for scalar input.
    """
    value, _ = _F_parts(x, y, z)
    return float(value) if value.ndim == 0 else value


def _F_mp(x, y, z):
    r = mpmath.sqrt(x * x + y * y + z * z)
    out = (x * x + y * y - 2 * z * z) / 6 * r
    p = (z * z - y * y) * x / 2
    if p != 0:
        out += p * mpmath.sign(x) * mpmath.log((r + abs(x)) / mpmath.sqrt(y * y + z * z))
    p = (z * z - x * x) * y / 2
    if p != 0:
        out += p * mpmath.sign(y) * mpmath.log((r + abs(y)) / mpmath.sqrt(x * x + z * z))
    p = x * y * z
    if p != 0:
        out += p * mpmath.atan(x * y / (z * r))
    return out


def _pair_value_mp(a: Sequence[float], b: Sequence[float]) -> float:
    """Multiprecision 64-term sum for one z-oriented pair; precision raised until stable."""
    prev = None
    for dps in (30, 50, 80, 120, 200):
        with mpmath.workdps(dps):
            am = [mpmath.mpf(float(v)) for v in a]
            bm = [mpmath.mpf(float(v)) for v in b]
            d = []
            for k in range(3):
                alo, ahi, blo, bhi = am[2 * k], am[2 * k + 1], bm[2 * k], bm[2 * k + 1]
                d.append((ahi - bhi, ahi - blo, alo - bhi, alo - blo))
            terms = []
            for i in range(4):
                for j in range(4):
                    for k in range(4):
                        s = _SIGN64[i, j, k]
                        terms.append(s * _F_mp(d[0][i], d[1][j], d[2][k]))
            val = mpmath.fsum(terms)
            if prev is not None and abs(val - prev) <= mpmath.mpf(10) ** (-20) * abs(val):
                return float(val)
            if prev is not None and val == 0 and prev == 0:
                return 0.0
            prev = val
    return float(prev)


def _pair_terms(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Signed terms and magnitudes, shape (P, 64), for z-oriented bound rows a, b."""
    diffs = []
    for k in range(3):
        alo, ahi, blo, bhi = a[:, 2 * k], a[:, 2 * k + 1], b[:, 2 * k], b[:, 2 * k + 1]
        diffs.append(np.stack([ahi - bhi, ahi - blo, alo - bhi, alo - blo], axis=1))
    val, mag = _F_parts(diffs[0][:, :, None, None], diffs[1][:, None, :, None],
                        diffs[2][:, None, None, :])
    p = a.shape[0]
    return (val * _SIGN64).reshape(p, 64), mag.reshape(p, 64)


def _check_disjoint(a: np.ndarray, b: np.ndarray) -> None:
    lo_a, hi_a = a[:, 0::2], a[:, 1::2]
    lo_b, hi_b = b[:, 0::2], b[:, 1::2]
    for start in range(0, len(a), _CHUNK_PAIRS):
        sl = slice(start, start + _CHUNK_PAIRS)
        overlap = np.minimum(hi_a[sl, None, :], hi_b[None, :, :]) - np.maximum(lo_a[sl, None, :], lo_b[None, :, :])
        hit = np.all(overlap > OVERLAP_TOL, axis=-1)
        if hit.any():
            i, j = np.argwhere(hit)[0]
            raise DomainError(f"box {start + i} of A overlaps box {j} of B; "
                              "the pair integral would include self-energy")


def _sum_pairs(a: np.ndarray, b: np.ndarray, rtol: float) -> float:
    """Sum of the pair integrals over every (row of a) x (row of b), z-oriented.

    Each chunk of pairs is reduced with math.fsum and chunks are merged in
    index order, so the result does not depend on how work is partitioned.
    """
    na, nb = len(a), len(b)
    total_pairs = na * nb
    partials: list[float] = []
    pair_bounds = np.empty(total_pairs)
    for start in range(0, total_pairs, _CHUNK_PAIRS):
        idx = np.arange(start, min(start + _CHUNK_PAIRS, total_pairs))
        terms, mag = _pair_terms(a[idx // nb], b[idx % nb])
        partials.append(math.fsum(terms.ravel().tolist()))
        pair_bounds[idx] = _ERR_FACTOR * _EPS * mag.sum(axis=1)
    total = math.fsum(partials)
    # per-pair bounds are worst case; independent pairs combine in quadrature
    sq = pair_bounds * pair_bounds
    remaining = math.fsum(sq.tolist())
    if math.sqrt(remaining) <= rtol * abs(total):
        return total

    order = np.argsort(pair_bounds)[::-1]
    corrections: list[float] = []
    for count, p in enumerate(order):
        if math.sqrt(max(remaining, 0.0)) <= rtol * abs(math.fsum(partials + corrections)):
            break
        if count >= _MAX_REFINE:
            warnings.warn(f"pair sum kept a rounding estimate of {math.sqrt(remaining):.3g} "
                          f"after refining {_MAX_REFINE} pairs", RuntimeWarning, stacklevel=3)
            break
        ap, bp = a[p // nb], b[p % nb]
        terms, _ = _pair_terms(ap[None, :], bp[None, :])
        corrections.append(_pair_value_mp(ap, bp) - math.fsum(terms.ravel().tolist()))
        remaining -= sq[p]
    return math.fsum(partials + corrections)


def _bounds(boxes) -> np.ndarray:
    if isinstance(boxes, AxisBox):
        boxes = [boxes]
    elif isinstance(boxes, BoxUnion):
        boxes = boxes.boxes
    return np.array([bx.bounds for bx in boxes], dtype=float).reshape(-1, 6)


def integral_from_bounds(a: Sequence[float], b: Sequence[float], rtol: float = 1e-9) -> float:
    """Raw 64-term sum for bound rows ``(xlo, xhi, ylo, yhi, zlo, zhi)``.

    No validity checks: equal limits and overlapping boxes are accepted. For
    overlapping boxes the result includes the singular self-interaction part.
    """
    return _sum_pairs(np.asarray(a, float).reshape(1, 6), np.asarray(b, float).reshape(1, 6), rtol)


def box_pair_I(a: AxisBox, b: AxisBox, rtol: float = 1e-9) -> float:
    """Signed six-fold integral of the z-kernel over a x b."""
    return box_pair_I_axis(a, b, 2, rtol)


def box_pair_I_axis(a: AxisBox, b: AxisBox, axis=2, rtol: float = 1e-9) -> float:
    k = _axis_index(axis)
    ab, bb = _bounds(a)[:, _PERMUTE[k]], _bounds(b)[:, _PERMUTE[k]]
    _check_disjoint(ab, bb)
    return _sum_pairs(ab, bb, rtol)


def union_pair_I(a: BoxUnion, b: BoxUnion, axis=2, rtol: float = 1e-9) -> float:
    k = _axis_index(axis)
    ab, bb = _bounds(a)[:, _PERMUTE[k]], _bounds(b)[:, _PERMUTE[k]]
    _check_disjoint(ab, bb)
    return _sum_pairs(ab, bb, rtol)


def lambda_box_union(pair: GeometryPair, axis=None, rtol: float = 1e-9) -> float:
    """Form factor of a box-union pair along a coordinate axis.

    ``axis`` defaults to the pair's direction, which must then be axis-aligned.
    """
    if not (isinstance(pair.A, BoxUnion) and isinstance(pair.B, BoxUnion)):
        raise DomainError("lambda_box_union needs box-union shapes")
    if axis is None:
        axis = pair.axis()
        if axis is None:
            raise DomainError("analytic evaluation needs an axis-aligned direction")
    return abs(union_pair_I(pair.A, pair.B, axis, rtol)) / pair.volume


# -- comb -----------------------------------------------------------------------------

@dataclass(frozen=True)
class CombIntegrals:
    I1: float  # teeth of A vs teeth of B
    I2: float  # teeth of A vs cap
    I3: float  # teeth of B vs base
    I4: float  # cap vs base

    @property
    def total(self) -> float:
        return math.fsum([self.I1, self.I2, self.I3, self.I4])


def comb_integrals(p: CombParams, rtol: float = 1e-9) -> CombIntegrals:
    teeth_a = _bounds(comb_teeth(p, "A"))
    teeth_b = _bounds(comb_teeth(p, "B"))
    cap, base = _bounds(comb_cap(p)), _bounds(comb_base(p))
    return CombIntegrals(
        I1=_sum_pairs(teeth_a, teeth_b, rtol),
        I2=_sum_pairs(teeth_a, cap, rtol),
        I3=_sum_pairs(teeth_b, base, rtol),
        I4=_sum_pairs(cap, base, rtol),
    )


def comb_lambda(p: CombParams, rtol: float = 1e-9) -> float:
    return abs(2.0 / (p.H + 2.0 * p.h) * comb_integrals(p, rtol).total)


# -- thin-slab limit --------------------------------------------------------------------

def slab_self_I(H: float) -> float:
    """Closed form of the unit-square slab's self-integral, thickness H.

    Obtained from the 8-term combination of ``eval_F`` at the slab corners;
    the value tends to -4*pi*H as H -> 0.
    """
    if not (math.isfinite(H) and H > 0):
        raise DomainError(f"slab thickness must be positive, got {H}")
    H2 = H * H
    s1 = math.sqrt(1.0 + H2)
    s2 = math.sqrt(2.0 + H2)
    terms = [
        8.0 / 3.0 * H2 * H,
        -8.0 / 3.0 * (1.0 - s1),
        -16.0 / 3.0 * H2 * s1,
        8.0 * H2 * math.atanh(1.0 / s1),
        -8.0 / 3.0 * (s2 - math.sqrt(2.0)),
        8.0 / 3.0 * H2 * s2,
        -8.0 * (math.atanh(1.0 / math.sqrt(2.0)) - math.atanh(1.0 / s2)),
        -8.0 * H2 * math.atanh(1.0 / s2),
        -8.0 * H * math.atan(1.0 / (H * s2)),
    ]
    return math.fsum(terms)


def slab_limit_ratio(H: float) -> float:
    """|slab_self_I(H) / 2H| as a fraction of 2*pi."""
    return abs(slab_self_I(H) / (2.0 * H)) / TWO_PI


# -- spheres and the lattice toy model -------------------------------------------------------

def sphere_pair_lambda(R: float, d: float) -> float:
    """Equal uniform spheres at center distance d, oscillating along the center line."""
    if not (R > 0 and math.isfinite(R)):
        raise DomainError(f"sphere radius must be positive, got {R}")
    if not d >= 2.0 * R:
        raise DomainError(f"spheres overlap: d={d} < 2R={2.0 * R}")
    return 8.0 * math.pi / 3.0 * (R / d) ** 3


def lattice_sum(cutoff: int) -> float:
    """Sum of (i^2+j^2)^(-3/2) over odd-parity lattice sites with max(|i|,|j|) <= cutoff."""
    if isinstance(cutoff, bool) or int(cutoff) != cutoff or cutoff < 1:
        raise DomainError(f"cutoff must be a positive integer, got {cutoff}")
    c = int(cutoff)
    j = np.arange(-c, c + 1)
    rows = []
    for i in range(-c, c + 1):
        jj = j[(i + j) % 2 != 0]
        rows.append(math.fsum(((i * i + jj * jj) ** -1.5).tolist()))
    return math.fsum(rows)


def toy_lambda(cutoff: int) -> float:
    # ball volume pi/6 at unit spacing
    return lattice_sum(cutoff) * math.pi / 6.0
