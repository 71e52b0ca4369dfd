"""JSON geometry documents.

A document describes one pair::

    {"A": <shape>, "B": <shape>, "direction": [nx, ny, nz]}

with shapes encoded as::

    {"type": "boxUnion", "boxes": [{"min": [x, y, z], "max": [x, y, z]}, ...]}
    {"type": "sphere", "center": [x, y, z], "radius": r}
    {"type": "cylinderZ", "center": [x, y, z], "radius": r, "height": h}
    {"type": "comb", "H": H, "h": h, "N": N, "side": "A" | "B"}

``direction`` may be omitted only when both shapes are combs (defaults to e_z).
"""
from __future__ import annotations

import json
import math
from typing import Any

from .geometry import (AxisBox, BoxUnion, CombParams, CylinderZ, GeometryError,
                       GeometryPair, Sphere, comb_side)


class DocumentError(ValueError):
    """Malformed geometry document; the message names the offending field."""


def _require(obj: dict, key: str, where: str) -> Any:
    if not isinstance(obj, dict):
        raise DocumentError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise DocumentError(f"{where}: missing required field '{key}'")
    return obj[key]


def _number(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise DocumentError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _vector(v: Any, where: str) -> tuple[float, float, float]:
    if not isinstance(v, list) or len(v) != 3:
        raise DocumentError(f"{where}: expected a list of three numbers, got {v!r}")
    return tuple(_number(c, f"{where}[{i}]") for i, c in enumerate(v))


def parse_shape(obj: Any, where: str = "shape"):
    kind = _require(obj, "type", where)
    try:
        if kind == "boxUnion":
            boxes = _require(obj, "boxes", where)
            if not isinstance(boxes, list) or not boxes:
                raise DocumentError(f"{where}.boxes: expected a non-empty list")
            return BoxUnion(tuple(
                AxisBox.from_corners(_vector(_require(b, "min", f"{where}.boxes[{i}]"), f"{where}.boxes[{i}].min"),
                                     _vector(_require(b, "max", f"{where}.boxes[{i}]"), f"{where}.boxes[{i}].max"))
                for i, b in enumerate(boxes)))
        if kind == "sphere":
            return Sphere(_vector(_require(obj, "center", where), f"{where}.center"),
                          _number(_require(obj, "radius", where), f"{where}.radius"))
        if kind == "cylinderZ":
            return CylinderZ(_vector(_require(obj, "center", where), f"{where}.center"),
                             _number(_require(obj, "radius", where), f"{where}.radius"),
                             _number(_require(obj, "height", where), f"{where}.height"))
        if kind == "comb":
            n = _require(obj, "N", where)
            if isinstance(n, bool) or not isinstance(n, int):
                raise DocumentError(f"{where}.N: expected a positive integer, got {n!r}")
            side = _require(obj, "side", where)
            if side not in ("A", "B"):
                raise DocumentError(f"{where}.side: expected 'A' or 'B', got {side!r}")
            params = CombParams(_number(_require(obj, "H", where), f"{where}.H"),
                                _number(_require(obj, "h", where), f"{where}.h"), n)
            return comb_side(params, side)
    except GeometryError as exc:
        raise GeometryError(f"{where}: {exc}") from exc
    raise DocumentError(f"{where}.type: unknown shape type {kind!r}")


def parse_pair(obj: Any, where: str = "document") -> GeometryPair:
    """Build a validated pair.

    Structural problems raise DocumentError; well-formed but invalid geometry
    (overlap, unequal volumes, non-positive sizes) raises GeometryError.
    """
    a_obj = _require(obj, "A", where)
    b_obj = _require(obj, "B", where)
    A = parse_shape(a_obj, f"{where}.A")
    B = parse_shape(b_obj, f"{where}.B")
    if "direction" in obj:
        direction = _vector(obj["direction"], f"{where}.direction")
        if all(c == 0.0 for c in direction):
            raise DocumentError(f"{where}.direction: must be nonzero")
    elif a_obj.get("type") == "comb" and b_obj.get("type") == "comb":
        direction = (0.0, 0.0, 1.0)
    else:
        raise DocumentError(f"{where}: missing required field 'direction' (only comb pairs may omit it)")
    try:
        return GeometryPair(A, B, direction)
    except GeometryError as exc:
        raise GeometryError(f"{where}: {exc}") from exc


def loads_pair(text: str, source: str = "<input>") -> GeometryPair:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_pair(obj, source)


def load_pair(path: str) -> GeometryPair:
    with open(path, encoding="utf-8") as fh:
        return loads_pair(fh.read(), path)


def shape_to_dict(shape) -> dict:
    if isinstance(shape, BoxUnion):
        return {"type": "boxUnion",
                "boxes": [{"min": [b.xlo, b.ylo, b.zlo], "max": [b.xhi, b.yhi, b.zhi]} for b in shape.boxes]}
    if isinstance(shape, Sphere):
        return {"type": "sphere", "center": list(shape.center), "radius": shape.radius}
    if isinstance(shape, CylinderZ):
        return {"type": "cylinderZ", "center": list(shape.center), "radius": shape.radius,
                "height": shape.height}
    raise TypeError(f"not a shape: {shape!r}")


def pair_to_dict(pair: GeometryPair) -> dict:
    return {"A": shape_to_dict(pair.A), "B": shape_to_dict(pair.B), "direction": list(pair.direction)}
