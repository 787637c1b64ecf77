"""Shadow projection of line buildings onto the trajectory and interval algebra.

Coordinates are BS-centered: the BS sits at ``(u, v) = (0, 0)`` at height
``h_bs`` and the trajectory is the line ``v = r`` at height ``h_user``,
covering ``x`` in ``[0, d]`` (or any ``[lo, hi]`` passed explicitly).
A building segment ``[u_lo, u_hi]`` on the line ``v = cv`` shadows the
trajectory points ``x`` whose sight ray crosses it: ``x * cv / r`` in
``[u_lo, u_hi]``, provided the building reaches the sight line at its depth.

Every code path (single building, Monte Carlo, real layouts) goes through
:func:`shadow_arrays` so that the same inputs give bit-identical intervals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import Building, ScenarioParams


class DomainError(ValueError):
    pass


class Kind(enum.Enum):
    LOS = "LOS"
    NLOS = "NLOS"


@dataclass(frozen=True)
class Interval:
    start: float
    end: float
    kind: Kind
    censored: bool = False

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class IntervalSet:
    """Alternating LOS/NLOS intervals tiling ``[lo, hi]``."""

    intervals: tuple[Interval, ...]
    lo: float
    hi: float

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def of_kind(self, kind: Kind, include_censored: bool = True) -> list[Interval]:
        return [iv for iv in self.intervals if iv.kind is kind and (include_censored or not iv.censored)]

    def lengths(self, kind: Kind, include_censored: bool = True) -> np.ndarray:
        return np.array([iv.length for iv in self.of_kind(kind, include_censored)], dtype=float)

    def total(self, kind: Kind) -> float:
        return float(sum(iv.length for iv in self.of_kind(kind)))

    def check(self) -> None:
        """Assert the tiling invariants; raises AssertionError on violation."""
        ivs = self.intervals
        assert ivs, "empty interval set"
        assert ivs[0].start == self.lo and ivs[-1].end == self.hi
        for a, b in zip(ivs[:-1], ivs[1:]):
            assert a.end == b.start, (a, b)
            assert a.kind is not b.kind, (a, b)
        for iv in ivs:
            assert iv.start < iv.end, iv
            assert iv.censored == (iv.start == self.lo or iv.end == self.hi), iv


# --------------------------------------------------------------------------
# shadows
# --------------------------------------------------------------------------

def sight_line_height(params: ScenarioParams, cv):
    """Height of the BS-user sight line at depth ``cv`` from the BS."""
    return params.h_bs - (params.h_bs - params.h_user) * cv / params.r


def shadow_arrays(u_lo, u_hi, cv, h, r: float, h_bs: float, h_user: float):
    """Vectorized shadows of many segments.

    Returns ``(lo, hi, blocks)``; ``lo``/``hi`` are defined for every input
    and ``blocks`` marks the segments tall enough to cut the sight line.
    """
    u_lo = np.asarray(u_lo, dtype=float)
    u_hi = np.asarray(u_hi, dtype=float)
    cv = np.asarray(cv, dtype=float)
    h = np.asarray(h, dtype=float)
    blocks = h >= h_bs - (h_bs - h_user) * cv / r
    mag = r / cv
    return u_lo * mag, u_hi * mag, blocks


def shadow_of_building(b: Building, params: ScenarioParams) -> tuple[float, float] | None:
    if not 0 < b.cv < params.r:
        raise DomainError(f"building depth cv={b.cv} outside (0, r={params.r})")
    lo, hi, blocks = shadow_arrays(b.u_lo, b.u_hi, b.cv, b.height, params.r, params.h_bs, params.h_user)
    if not blocks:
        return None
    return float(lo), float(hi)


# --------------------------------------------------------------------------
# merging
# --------------------------------------------------------------------------

def union_arrays(lo, hi, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Clip shadows to ``[a, b]`` and union them by sort-and-sweep.

    Shadows that overlap or share an endpoint are merged.  Returns the
    sorted starts and ends of the disjoint blocked runs.
    """
    lo = np.maximum(np.asarray(lo, dtype=float), a)
    hi = np.minimum(np.asarray(hi, dtype=float), b)
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    if lo.size == 0:
        return lo, hi
    order = np.lexsort((hi, lo))
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    head = np.empty(lo.size, dtype=bool)
    head[0] = True
    head[1:] = lo[1:] > reach[:-1]
    idx = np.flatnonzero(head)
    last = np.append(idx[1:] - 1, lo.size - 1)
    return lo[idx], reach[last]


def complement_arrays(starts, ends, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Gaps of ``[a, b]`` not covered by the disjoint sorted runs."""
    gs = np.concatenate(([a], ends))
    ge = np.concatenate((starts, [b]))
    keep = ge > gs
    return gs[keep], ge[keep]


def build_interval_set(nlos_s, nlos_e, los_s, los_e, a: float, b: float) -> IntervalSet:
    items = [Interval(float(s), float(e), Kind.NLOS, bool(s == a or e == b)) for s, e in zip(nlos_s, nlos_e)]
    items += [Interval(float(s), float(e), Kind.LOS, bool(s == a or e == b)) for s, e in zip(los_s, los_e)]
    items.sort(key=lambda iv: iv.start)
    return IntervalSet(tuple(items), float(a), float(b))


def merge_shadow_arrays(lo, hi, a: float, b: float) -> IntervalSet:
    ns, ne = union_arrays(lo, hi, a, b)
    ls, le = complement_arrays(ns, ne, a, b)
    return build_interval_set(ns, ne, ls, le, a, b)


def merge_shadows(shadows: Iterable[tuple[float, float]], params: ScenarioParams) -> IntervalSet:
    shadows = list(shadows)
    if shadows:
        lo, hi = np.array(shadows, dtype=float).T
    else:
        lo = hi = np.empty(0)
    return merge_shadow_arrays(lo, hi, 0.0, params.d)


def intervals_for_buildings(buildings: Sequence[Building], params: ScenarioParams) -> IntervalSet:
    shadows = [s for s in (shadow_of_building(b, params) for b in buildings) if s is not None]
    return merge_shadows(shadows, params)


# --------------------------------------------------------------------------
# brute-force oracle
# --------------------------------------------------------------------------

def point_blocked(b: Building, params: ScenarioParams, x) -> np.ndarray:
    """Per-point test: is ``x`` blocked by ``b``?

    The building center must lie in the blocking parallelogram of ``x``:
    ``|cu - x * cv / r| <= l / 2`` and the building reaches the sight line.
    """
    x = np.asarray(x, dtype=float)
    tall = b.height >= sight_line_height(params, b.cv)
    return tall & (np.abs(b.cu - x * b.cv / params.r) <= b.length / 2)


def brute_force_intervals(buildings: Sequence[Building], params: ScenarioParams, step: float) -> IntervalSet:
    """Sample the trajectory every ``step`` meters and read off the runs.

    Run boundaries are placed halfway between the last sample of one kind
    and the first sample of the next, so each is within ``step / 2`` of the
    truth for features wider than ``step``.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    d = params.d
    n = int(np.ceil(d / step))
    x = np.linspace(0.0, d, n + 1)
    blocked = np.zeros(x.size, dtype=bool)
    for b in buildings:
        blocked |= point_blocked(b, params, x)
    change = np.flatnonzero(blocked[1:] != blocked[:-1])
    cuts = np.concatenate(([0.0], 0.5 * (x[change] + x[change + 1]), [d]))
    starts, ends = cuts[:-1], cuts[1:]
    run_blocked = blocked[np.concatenate(([0], change + 1))]
    items = [
        Interval(float(s), float(e), Kind.NLOS if blk else Kind.LOS, bool(s == 0.0 or e == d))
        for s, e, blk in zip(starts, ends, run_blocked)
    ]
    return IntervalSet(tuple(items), 0.0, float(d))
