"""Poisson line-building scenes, trial execution and run statistics.

Random streams
--------------
Trial ``i`` of a run seeded with ``seed`` draws from
``Generator(PCG64(SeedSequence(seed, spawn_key=(i,))))``.  Within a trial the
draw order is fixed: the building count, then ``cu``, ``cv``, ``length`` and
``height`` arrays (one ``random(n)`` / ``integers`` call each).  Trials are
therefore independent of each other and of how they are distributed over
worker processes.

The building count is sampled here rather than with ``Generator.poisson`` so
the scheme is pinned to documented algorithms: sequential inversion for
means below 30 and Hormann's PTRS transformed rejection otherwise.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .geometry import complement_arrays, shadow_arrays, union_arrays
from .model import Building, ScenarioParams, sample_heights, sample_lengths, validate

INVERSION_LIMIT = 30.0


class EmptySampleError(ValueError):
    pass


# --------------------------------------------------------------------------
# random variates
# --------------------------------------------------------------------------

def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _poisson_inversion(rng: np.random.Generator, mean: float) -> int:
    u = rng.random()
    k = 0
    p = math.exp(-mean)
    cdf = p
    while u > cdf:
        k += 1
        p *= mean / k
        if p == 0.0:
            break
        cdf += p
    return k


def _poisson_ptrs(rng: np.random.Generator, mean: float) -> int:
    # Hormann (1993), "The transformed rejection method for generating
    # Poisson random variables"; valid for mean >= 10.
    slam = math.sqrt(mean)
    loglam = math.log(mean)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2)
    while True:
        u = rng.random() - 0.5
        v = rng.random()
        us = 0.5 - abs(u)
        k = math.floor((2 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= v_r:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if math.log(v) + math.log(inv_alpha) - math.log(a / (us * us) + b) <= -mean + k * loglam - math.lgamma(k + 1):
            return k


def poisson(rng: np.random.Generator, mean: float) -> int:
    if mean < 0:
        raise ValueError("Poisson mean must be >= 0")
    if mean == 0:
        return 0
    if mean < INVERSION_LIMIT:
        return _poisson_inversion(rng, mean)
    return _poisson_ptrs(rng, mean)


def _open_unit(rng: np.random.Generator, n: int) -> np.ndarray:
    """Uniform variates strictly inside (0, 1)."""
    return (rng.integers(0, 2**52, n).astype(float) + 0.5) * 2.0**-52


# --------------------------------------------------------------------------
# scenes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Scene:
    """Buildings of one trial as parallel arrays."""

    cu: np.ndarray
    cv: np.ndarray
    length: np.ndarray
    height: np.ndarray

    def __len__(self):
        return self.cu.size

    @property
    def u_lo(self) -> np.ndarray:
        return self.cu - self.length / 2

    @property
    def u_hi(self) -> np.ndarray:
        return self.cu + self.length / 2

    def buildings(self) -> list[Building]:
        return [Building(float(a), float(b), float(c), float(e)) for a, b, c, e in zip(self.cu, self.cv, self.length, self.height)]


def generation_area(params: ScenarioParams) -> float:
    return (params.d + params.l_max) * params.r


def sample_scene_arrays(params: ScenarioParams, rng: np.random.Generator) -> Scene:
    """Buildings over ``[-l_max/2, d + l_max/2] x (0, r)``.

    No building centered outside this strip can shadow any point of
    ``[0, d]``, so the strip is exactly the relevant region.
    """
    n = poisson(rng, params.lam * generation_area(params))
    cu = -params.l_max / 2 + (params.d + params.l_max) * rng.random(n)
    cv = np.minimum(params.r * _open_unit(rng, n), np.nextafter(params.r, 0.0))
    length = sample_lengths(params, rng, n)
    height = sample_heights(params, rng, n)
    return Scene(cu, cv, length, height)


def sample_scene(params: ScenarioParams, rng: np.random.Generator) -> list[Building]:
    return sample_scene_arrays(params, rng).buildings()


# --------------------------------------------------------------------------
# trials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialConfig:
    params: ScenarioParams
    n_trials: int
    seed: int
    include_censored: bool = False

    def __post_init__(self):
        validate(self.params)
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TrialIntervals:
    """Interval endpoints of one trial, in trajectory coordinates."""

    los_start: np.ndarray
    los_end: np.ndarray
    nlos_start: np.ndarray
    nlos_end: np.ndarray
    lo: float
    hi: float

    def rows(self):
        """``(kind, start, end, censored)`` sorted by start."""
        rows = [("LOS", s, e) for s, e in zip(self.los_start, self.los_end)]
        rows += [("NLOS", s, e) for s, e in zip(self.nlos_start, self.nlos_end)]
        rows.sort(key=lambda t: t[1])
        return [(k, float(s), float(e), bool(s == self.lo or e == self.hi)) for k, s, e in rows]


def scene_intervals(scene: Scene, params: ScenarioParams, lo: float = 0.0, hi: float | None = None) -> TrialIntervals:
    hi = params.d if hi is None else hi
    s_lo, s_hi, blocks = shadow_arrays(scene.u_lo, scene.u_hi, scene.cv, scene.height, params.r, params.h_bs, params.h_user)
    ns, ne = union_arrays(s_lo[blocks], s_hi[blocks], lo, hi)
    ls, le = complement_arrays(ns, ne, lo, hi)
    return TrialIntervals(ls, le, ns, ne, lo, hi)


def run_single_trial(params: ScenarioParams, seed: int, trial: int) -> tuple[Scene, TrialIntervals]:
    scene = sample_scene_arrays(params, trial_rng(seed, trial))
    return scene, scene_intervals(scene, params)


@dataclass
class RunStats:
    """Aggregated interval statistics of one or more trials.

    ``los_lengths``/``nlos_lengths`` hold uncensored lengths unless the run
    included censored intervals.  Counters ``n_*_intervals`` are uncensored
    counts, ``n_*_total`` include censored intervals.
    """

    d: float
    include_censored: bool = False
    los_lengths: np.ndarray = field(default_factory=lambda: np.empty(0))
    nlos_lengths: np.ndarray = field(default_factory=lambda: np.empty(0))
    n_los_intervals: int = 0
    n_nlos_intervals: int = 0
    n_los_total: int = 0
    n_nlos_total: int = 0
    trial_los_length: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_trials(self) -> int:
        return self.trial_los_length.size

    @property
    def total_trajectory_length(self) -> float:
        return self.n_trials * self.d

    @property
    def point_los_frequency(self) -> float:
        return math.fsum(self.trial_los_length) / self.total_trajectory_length

    @property
    def n_los_censored(self) -> int:
        return self.n_los_total - self.n_los_intervals

    @property
    def n_nlos_censored(self) -> int:
        return self.n_nlos_total - self.n_nlos_intervals

    def los_density(self) -> float:
        """LOS intervals per meter, censored ones counted as half."""
        return (self.n_los_intervals + 0.5 * self.n_los_censored) / self.total_trajectory_length

    def nlos_density(self) -> float:
        return (self.n_nlos_intervals + 0.5 * self.n_nlos_censored) / self.total_trajectory_length

    def mean_los(self) -> float:
        return float(np.mean(self.los_lengths)) if self.los_lengths.size else math.nan

    def mean_nlos(self) -> float:
        return float(np.mean(self.nlos_lengths)) if self.nlos_lengths.size else math.nan

    @classmethod
    def from_trials(cls, trials, d: float, include_censored: bool = False) -> "RunStats":
        los, nlos, totals = [], [], []
        counts = np.zeros(4, dtype=np.int64)
        for tr in trials:
            los_len = tr.los_end - tr.los_start
            nlos_len = tr.nlos_end - tr.nlos_start
            los_cens = (tr.los_start == tr.lo) | (tr.los_end == tr.hi)
            nlos_cens = (tr.nlos_start == tr.lo) | (tr.nlos_end == tr.hi)
            los.append(los_len if include_censored else los_len[~los_cens])
            nlos.append(nlos_len if include_censored else nlos_len[~nlos_cens])
            counts += ((~los_cens).sum(), (~nlos_cens).sum(), los_len.size, nlos_len.size)
            totals.append(math.fsum(los_len))
        return cls(
            d=d,
            include_censored=include_censored,
            los_lengths=np.concatenate(los) if los else np.empty(0),
            nlos_lengths=np.concatenate(nlos) if nlos else np.empty(0),
            n_los_intervals=int(counts[0]),
            n_nlos_intervals=int(counts[1]),
            n_los_total=int(counts[2]),
            n_nlos_total=int(counts[3]),
            trial_los_length=np.array(totals, dtype=float),
        )

    def merge(self, other: "RunStats") -> "RunStats":
        if other.d != self.d or other.include_censored != self.include_censored:
            raise ValueError("cannot merge runs with different d or censoring policy")
        return RunStats(
            d=self.d,
            include_censored=self.include_censored,
            los_lengths=np.concatenate((self.los_lengths, other.los_lengths)),
            nlos_lengths=np.concatenate((self.nlos_lengths, other.nlos_lengths)),
            n_los_intervals=self.n_los_intervals + other.n_los_intervals,
            n_nlos_intervals=self.n_nlos_intervals + other.n_nlos_intervals,
            n_los_total=self.n_los_total + other.n_los_total,
            n_nlos_total=self.n_nlos_total + other.n_nlos_total,
            trial_los_length=np.concatenate((self.trial_los_length, other.trial_los_length)),
        )

    def summary(self) -> dict:
        return {
            "n_trials": self.n_trials,
            "total_trajectory_length": self.total_trajectory_length,
            "point_los_frequency": self.point_los_frequency,
            "n_los_intervals": self.n_los_intervals,
            "n_nlos_intervals": self.n_nlos_intervals,
            "n_los_total": self.n_los_total,
            "n_nlos_total": self.n_nlos_total,
            "mean_Z": self.mean_los(),
            "mean_S": self.mean_nlos(),
            "los_density": self.los_density(),
            "nlos_density": self.nlos_density(),
            "include_censored": self.include_censored,
        }


def _run_block(config: TrialConfig, start: int, stop: int) -> RunStats:
    trials = (run_single_trial(config.params, config.seed, i)[1] for i in range(start, stop))
    return RunStats.from_trials(trials, config.params.d, config.include_censored)


def _blocks(n: int, parts: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def run_trials(config: TrialConfig, workers: int = 1) -> RunStats:
    """Run all trials; the result does not depend on ``workers``."""
    if workers <= 1 or config.n_trials == 1:
        return _run_block(config, 0, config.n_trials)
    blocks = _blocks(config.n_trials, min(workers * 4, config.n_trials))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_block, [config] * len(blocks), *zip(*blocks)))
    out = parts[0]
    for p in parts[1:]:
        out = out.merge(p)
    return out


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------

def empirical_cdf(samples, grid) -> list[tuple[float, float]]:
    """Right-continuous ECDF ``#(samples <= x) / n`` evaluated on ``grid``."""
    samples = np.sort(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise EmptySampleError("empirical CDF of an empty sample")
    grid = np.asarray(grid, dtype=float)
    f = np.searchsorted(samples, grid, side="right") / samples.size
    return [(float(x), float(y)) for x, y in zip(grid, f)]


@dataclass(frozen=True)
class SweepRow:
    r: float
    los_density: float
    nlos_density: float
    mean_Z: float
    mean_S: float


def density_sweep(
    params: ScenarioParams,
    r_values: Sequence[float],
    n_trials: int,
    seed: int,
    include_censored: bool = False,
    workers: int = 1,
) -> list[SweepRow]:
    """Rerun :func:`run_trials` at each ``r`` (same seed for every ``r``)."""
    if len(r_values) == 0:
        raise ValueError("r_values must be non-empty")
    rows = []
    for r in r_values:
        stats = run_trials(TrialConfig(replace(params, r=float(r)), n_trials, seed, include_censored), workers)
        rows.append(SweepRow(float(r), stats.los_density(), stats.nlos_density(), stats.mean_los(), stats.mean_nlos()))
    return rows


def peak_location(x, y, half_width: int = 2) -> tuple[float, float]:
    """Locate the maximum of a sampled curve by a local quadratic fit.

    Fits a parabola to the ``2 * half_width + 1`` samples centered on the
    largest one and returns its vertex ``(x_peak, y_peak)``.  Falls back to
    the raw argmax when the fit is not concave or the vertex leaves the
    window.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = int(np.argmax(y))
    lo, hi = max(0, k - half_width), min(x.size, k + half_width + 1)
    if hi - lo >= 3:
        c2, c1, c0 = np.polyfit(x[lo:hi], y[lo:hi], 2)
        if c2 < 0:
            xp = -c1 / (2 * c2)
            if x[lo] <= xp <= x[hi - 1]:
                return float(xp), float(np.polyval((c2, c1, c0), xp))
    return float(x[k]), float(y[k])


def crossing(x, a, b) -> tuple[float, float]:
    """First crossing of curves ``a`` and ``b`` (both positive).

    Interpolates ``log(a / b)`` linearly between the bracketing samples and
    the common value geometrically.  Raises ValueError if they never cross.
    """
    x = np.asarray(x, dtype=float)
    g = np.log(np.asarray(a, dtype=float) / np.asarray(b, dtype=float))
    idx = np.flatnonzero(np.sign(g[:-1]) * np.sign(g[1:]) <= 0)
    if idx.size == 0:
        raise ValueError("curves do not cross on this grid")
    i = int(idx[0])
    t = 0.0 if g[i] == g[i + 1] else g[i] / (g[i] - g[i + 1])
    xc = x[i] + t * (x[i + 1] - x[i])
    la = np.log(a[i]) + t * (np.log(a[i + 1]) - np.log(a[i]))
    return float(xc), float(np.exp(la))
