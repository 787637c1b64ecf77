"""Deterministic LOS/NLOS evaluation over explicit building layouts.

A layout is a JSON document with planar coordinates in meters::

    {
      "name": "grid",
      "units": "m",
      "bbox": [u_min, u_max, v_min, v_max],            # optional
      "buildings": [{"u_lo": 0, "u_hi": 20, "v_lo": 50, "v_hi": 60, "h": 15}],
      "lines": [{"u_lo": 0, "u_hi": 20, "v": 50, "h": 15}]   # optional
    }

The street axis is ``u``.  Only building edges parallel to it block; each
rectangle contributes its two ``v = const`` sides.  Without ``bbox`` the
bounding box is the hull of all rectangles and lines.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import IntervalSet, Kind, merge_shadow_arrays, shadow_arrays

LINE_FACTOR_ANCHORS = ((50.0, 2.0), (150.0, 1.3), (300.0, 1.0))


class LayoutError(ValueError):
    """Malformed layout document; the message names the offending field."""


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class Rect:
    u_lo: float
    u_hi: float
    v_lo: float
    v_hi: float
    h: float


@dataclass(frozen=True)
class Line:
    u_lo: float
    u_hi: float
    v: float
    h: float


@dataclass(frozen=True)
class LayoutFile:
    rects: tuple[Rect, ...] = ()
    lines: tuple[Line, ...] = ()
    bbox: tuple[float, float, float, float] | None = None
    name: str = ""
    units: str = "m"

    def __post_init__(self):
        if self.bbox is None and (self.rects or self.lines):
            us = [x for r in self.rects for x in (r.u_lo, r.u_hi)] + [x for l in self.lines for x in (l.u_lo, l.u_hi)]
            vs = [x for r in self.rects for x in (r.v_lo, r.v_hi)] + [l.v for l in self.lines]
            object.__setattr__(self, "bbox", (min(us), max(us), min(vs), max(vs)))

    @property
    def area(self) -> float:
        if self.bbox is None:
            return 0.0
        u0, u1, v0, v1 = self.bbox
        return (u1 - u0) * (v1 - v0)

    def to_json(self) -> dict:
        doc = {"name": self.name, "units": self.units}
        if self.bbox is not None:
            doc["bbox"] = list(self.bbox)
        doc["buildings"] = [{"u_lo": r.u_lo, "u_hi": r.u_hi, "v_lo": r.v_lo, "v_hi": r.v_hi, "h": r.h} for r in self.rects]
        if self.lines:
            doc["lines"] = [{"u_lo": l.u_lo, "u_hi": l.u_hi, "v": l.v, "h": l.h} for l in self.lines]
        return doc


@dataclass(frozen=True)
class LayoutQuery:
    """One BS and the trajectory it serves.

    The trajectory runs along ``v = bs_v + side * r`` for ``u`` in
    ``[u_start, u_end]``.  ``thinning`` keeps each building independently
    with that probability (seeded by ``seed``).
    """

    bs_u: float
    bs_v: float
    h_bs: float
    r: float
    u_start: float
    u_end: float
    h_user: float = 1.5
    side: int = 1
    thinning: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.r > 0:
            raise QueryError(f"r must be > 0, got {self.r}")
        if not self.u_end > self.u_start:
            raise QueryError(f"empty trajectory range [{self.u_start}, {self.u_end}]")
        if self.side not in (1, -1):
            raise QueryError("side must be +1 or -1")
        if not 0 < self.thinning <= 1:
            raise QueryError(f"thinning must be in (0, 1], got {self.thinning}")
        if not self.h_user < self.h_bs:
            raise QueryError("h_bs must be strictly above h_user")

    @property
    def trajectory_v(self) -> float:
        return self.bs_v + self.side * self.r


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

def _number(obj: dict, key: str, where: str) -> float:
    if key not in obj:
        raise LayoutError(f"{where}.{key}: missing")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise LayoutError(f"{where}.{key}: expected a finite number, got {val!r}")
    return float(val)


def parse_layout(doc: dict) -> LayoutFile:
    if not isinstance(doc, dict):
        raise LayoutError("layout: expected a JSON object")
    units = doc.get("units", "m")
    if units != "m":
        raise LayoutError(f"units: only 'm' is supported, got {units!r}")
    rects, lines = [], []
    for i, b in enumerate(doc.get("buildings", [])):
        where = f"buildings[{i}]"
        if not isinstance(b, dict):
            raise LayoutError(f"{where}: expected an object")
        r = Rect(*(_number(b, k, where) for k in ("u_lo", "u_hi", "v_lo", "v_hi", "h")))
        if not r.u_lo < r.u_hi:
            raise LayoutError(f"{where}: u_lo must be < u_hi")
        if r.v_lo > r.v_hi:
            raise LayoutError(f"{where}: v_lo must be <= v_hi")
        if r.h < 0:
            raise LayoutError(f"{where}.h: must be >= 0")
        rects.append(r)
    for i, l in enumerate(doc.get("lines", [])):
        where = f"lines[{i}]"
        if not isinstance(l, dict):
            raise LayoutError(f"{where}: expected an object")
        ln = Line(*(_number(l, k, where) for k in ("u_lo", "u_hi", "v", "h")))
        if not ln.u_lo < ln.u_hi:
            raise LayoutError(f"{where}: u_lo must be < u_hi")
        if ln.h < 0:
            raise LayoutError(f"{where}.h: must be >= 0")
        lines.append(ln)
    bbox = doc.get("bbox")
    if bbox is not None:
        if not (isinstance(bbox, list) and len(bbox) == 4):
            raise LayoutError("bbox: expected [u_min, u_max, v_min, v_max]")
        bbox = tuple(_number({"v": x}, "v", f"bbox[{i}]") for i, x in enumerate(bbox))
        if not (bbox[0] < bbox[1] and bbox[2] < bbox[3]):
            raise LayoutError("bbox: empty box")
    return LayoutFile(tuple(rects), tuple(lines), bbox, str(doc.get("name", "")), units)


def load_layout(path) -> LayoutFile:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise LayoutError(f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return parse_layout(doc)


def save_layout(layout: LayoutFile, path) -> None:
    Path(path).write_text(json.dumps(layout.to_json(), indent=1) + "\n")


# --------------------------------------------------------------------------
# modeling helpers
# --------------------------------------------------------------------------

def rect_to_lines(rect: Rect, trajectory_side: int | None = None) -> list[Line]:
    """Sides of ``rect`` parallel to the street axis.

    With ``trajectory_side`` of +1 (trajectory at larger ``v``) or -1 only the
    side facing the trajectory is kept.
    """
    low = Line(rect.u_lo, rect.u_hi, rect.v_lo, rect.h)
    high = Line(rect.u_lo, rect.u_hi, rect.v_hi, rect.h)
    if rect.v_lo == rect.v_hi:
        return [low]
    if trajectory_side is None:
        return [low, high]
    return [high] if trajectory_side > 0 else [low]


def effective_line_factor(r: float) -> float:
    """Equivalent number of blocking lines per rectangular building at distance ``r``."""
    if not r > 0:
        raise ValueError("r must be > 0")
    xs, ys = zip(*LINE_FACTOR_ANCHORS)
    return float(np.interp(r, xs, ys))


def estimate_density(layout: LayoutFile) -> float:
    """Buildings per square meter over the bounding box.

    Rectangles are counted when present; a lines-only layout counts lines.
    """
    n = len(layout.rects) or len(layout.lines)
    if n == 0 or layout.area <= 0:
        raise ValueError("density needs a non-empty layout with a bounding box")
    return n / layout.area


def thin(layout: LayoutFile, keep: float, seed: int) -> LayoutFile:
    """Keep each building (and each standalone line) with probability ``keep``."""
    if keep >= 1:
        return layout
    rng = np.random.default_rng(seed)
    rk = rng.random(len(layout.rects)) < keep
    lk = rng.random(len(layout.lines)) < keep
    return LayoutFile(
        tuple(r for r, k in zip(layout.rects, rk) if k),
        tuple(l for l, k in zip(layout.lines, lk) if k),
        layout.bbox, layout.name, layout.units,
    )


def layout_lines(layout: LayoutFile) -> list[Line]:
    out = [ln for r in layout.rects for ln in rect_to_lines(r)]
    out.extend(layout.lines)
    return out


def random_queries(layout: LayoutFile, n: int, r: float, length: float, h_bs: float,
                   h_user: float = 1.5, seed: int = 0) -> list[LayoutQuery]:
    """BS positions uniform over the part of the box where the whole query fits."""
    u0, u1, v0, v1 = layout.bbox
    if u1 - u0 < length or v1 - v0 < r:
        raise QueryError("bounding box too small for the requested trajectory")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        u = u0 + (u1 - u0 - length) * rng.random()
        v = v0 + (v1 - v0 - r) * rng.random()
        out.append(LayoutQuery(bs_u=u, bs_v=v, h_bs=h_bs, r=r, u_start=u, u_end=u + length, h_user=h_user))
    return out


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LayoutResult:
    intervals: IntervalSet
    n_lines: int
    n_blocking: int
    query: LayoutQuery = field(repr=False)

    def los_lengths(self, include_censored: bool = False) -> np.ndarray:
        return self.intervals.lengths(Kind.LOS, include_censored)

    def nlos_lengths(self, include_censored: bool = False) -> np.ndarray:
        return self.intervals.lengths(Kind.NLOS, include_censored)

    @property
    def los_fraction(self) -> float:
        return self.intervals.total(Kind.LOS) / (self.intervals.hi - self.intervals.lo)


def _check_inside(layout: LayoutFile, q: LayoutQuery) -> None:
    if layout.bbox is None:
        return
    u0, u1, v0, v1 = layout.bbox
    if not (u0 <= q.u_start and q.u_end <= u1 and v0 <= q.trajectory_v <= v1):
        raise QueryError(f"trajectory v={q.trajectory_v}, u=[{q.u_start}, {q.u_end}] outside bbox {layout.bbox}")
    if not (u0 <= q.bs_u <= u1 and v0 <= q.bs_v <= v1):
        raise QueryError(f"BS at ({q.bs_u}, {q.bs_v}) outside bbox {layout.bbox}")


def evaluate_layout(layout: LayoutFile, query: LayoutQuery) -> LayoutResult:
    """Shadow every parallel edge between the BS and the trajectory.

    Intervals are reported along the trajectory in BS-relative coordinates,
    i.e. over ``[u_start - bs_u, u_end - bs_u]``.  Edges outside the open
    strip between the BS and trajectory lines are skipped.
    """
    _check_inside(layout, query)
    lines = layout_lines(thin(layout, query.thinning, query.seed))
    a = query.u_start - query.bs_u
    b = query.u_end - query.bs_u
    if lines:
        u_lo = np.array([l.u_lo for l in lines]) - query.bs_u
        u_hi = np.array([l.u_hi for l in lines]) - query.bs_u
        cv = query.side * (np.array([l.v for l in lines]) - query.bs_v)
        h = np.array([l.h for l in lines])
        inside = (cv > 0) & (cv < query.r)
        lo, hi, blocks = shadow_arrays(u_lo[inside], u_hi[inside], cv[inside], h[inside], query.r, query.h_bs, query.h_user)
        lo, hi = lo[blocks], hi[blocks]
        n_blocking = int(blocks.sum())
    else:
        lo = hi = np.empty(0)
        n_blocking = 0
    return LayoutResult(merge_shadow_arrays(lo, hi, a, b), len(lines), n_blocking, query)


def scene_layout(scene, params, name: str = "ppp-scene") -> LayoutFile:
    """Export a Monte Carlo scene as a lines-only layout in BS coordinates."""
    lines = tuple(
        Line(float(a), float(b), float(v), float(h))
        for a, b, v, h in zip(scene.u_lo, scene.u_hi, scene.cv, scene.height)
    )
    bbox = (-params.l_max / 2, params.d + params.l_max / 2, 0.0, params.r)
    return LayoutFile((), lines, bbox, name, "m")


def scene_query(params) -> LayoutQuery:
    """The query under which :func:`scene_layout` reproduces the trial."""
    return LayoutQuery(bs_u=0.0, bs_v=0.0, h_bs=params.h_bs, r=params.r,
                       u_start=0.0, u_end=params.d, h_user=params.h_user)
