"""Closed-form LOS/NLOS interval statistics and their quadrature cross-checks.

Two height-correction factors drive everything here:

* ``eta_x``: fraction of the full ``r * l`` blocking area that survives the
  height condition when blocking a single point, averaged over heights.
* ``eta_tilde``: the same averaging for the extra area swept when a point is
  extended to a segment.  The LOS-interval length is (approximately)
  exponential with rate ``lam * eta_tilde * r / 2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import HeightRegime, ScenarioParams, height_regime, mean_length


# --------------------------------------------------------------------------
# height correction factors
# --------------------------------------------------------------------------

def _point_fraction(params: ScenarioParams, h: float) -> float:
    """Fraction of depth ``(0, r)`` over which a height-``h`` building blocks a point."""
    hb, hu = params.h_bs, params.h_user
    if h < hu:
        return 0.0
    if h > hb:
        return 1.0
    return (h - hu) / (hb - hu)


def _segment_fraction(params: ScenarioParams, h: float) -> float:
    hb, hu = params.h_bs, params.h_user
    if h < hu:
        return 0.0
    if h > hb:
        return 1.0
    return 1.0 - ((hb - h) / (hb - hu)) ** 2


def eta_x(params: ScenarioParams) -> float:
    hb, hu = params.h_bs, params.h_user
    hmin, hmax = params.h_min, params.h_max
    regime = height_regime(params)
    if regime is HeightRegime.BS_BELOW_ALL:
        return 1.0
    if hmax == hmin:
        return _point_fraction(params, hmin)
    if regime is HeightRegime.BS_WITHIN:
        num = 2 * hb * hmax - hb**2 - hmin**2 - 2 * hu * (hmax - hmin)
        return num / (2 * (hb - hu) * (hmax - hmin))
    return (hmax + hmin - 2 * hu) / (2 * (hb - hu))


def eta_tilde(params: ScenarioParams) -> float:
    hb, hu = params.h_bs, params.h_user
    hmin, hmax = params.h_min, params.h_max
    regime = height_regime(params)
    if regime is HeightRegime.BS_BELOW_ALL:
        return 1.0
    if hmax == hmin:
        return _segment_fraction(params, hmin)
    span = hmax - hmin
    dh2 = (hb - hu) ** 2
    if regime is HeightRegime.BS_WITHIN:
        return (
            (hmax - hb) / span
            + (hu**2 - 2 * hb * hu) * (hb - hmin) / (span * dh2)
            + (2 / 3 * hb**3 - hb * hmin**2 + hmin**3 / 3) / (span * dh2)
        )
    return (
        (hu**2 - 2 * hb * hu) / dh2
        - (hmax**2 + hmax * hmin + hmin**2) / (3 * dh2)
        + hb * (hmax + hmin) / dh2
    )


def _composite_simpson(f, a: float, b: float, n: int) -> float:
    if n % 2:
        n += 1
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())


def _height_average(params: ScenarioParams, pieces, n_points: int) -> float:
    """Average of a piecewise integrand over ``H ~ U[h_min, h_max]``.

    ``pieces`` maps each region (below user, sloped, above BS) to a
    vectorized integrand; the height range is split at ``h_user`` and
    ``h_bs`` so every sub-integral sees a smooth polynomial.
    """
    if n_points < 64:
        raise ValueError(f"n_points must be >= 64, got {n_points}")
    hmin, hmax = params.h_min, params.h_max
    below, sloped, above = pieces
    if hmax == hmin:
        h0 = np.array([hmin])
        if hmin < params.h_user:
            return float(below(h0)[0])
        if hmin > params.h_bs:
            return float(above(h0)[0])
        return float(sloped(h0)[0])

    cuts = sorted({hmin, hmax, *(c for c in (params.h_user, params.h_bs) if hmin < c < hmax)})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        if mid < params.h_user:
            f = below
        elif mid > params.h_bs:
            f = above
        else:
            f = sloped
        n = max(2, int(round(n_points * (b - a) / (hmax - hmin))))
        total += _composite_simpson(f, a, b, n)
    return total / (hmax - hmin)


def eta_x_quadrature(params: ScenarioParams, n_points: int = 10_000) -> float:
    hb, hu = params.h_bs, params.h_user
    return _height_average(
        params,
        (
            np.zeros_like,
            lambda h: (h - hu) / (hb - hu),
            np.ones_like,
        ),
        n_points,
    )


def eta_tilde_quadrature(params: ScenarioParams, n_points: int = 10_000) -> float:
    hb, hu = params.h_bs, params.h_user
    return _height_average(
        params,
        (
            np.zeros_like,
            lambda h: 1.0 - ((hb - h) / (hb - hu)) ** 2,
            np.ones_like,
        ),
        n_points,
    )


# --------------------------------------------------------------------------
# blocking areas
# --------------------------------------------------------------------------

def blocking_area_point(params: ScenarioParams, l: float, h: float) -> float:
    """Area of center positions from which an ``(l, h)`` building blocks one point."""
    return params.r * l * _point_fraction(params, h)


def blocking_area_segment(params: ScenarioParams, l: float, h: float, z: float) -> float:
    """Area of center positions blocking at least one point of a length-``z`` segment."""
    return params.r / 2 * (z * _segment_fraction(params, h) + 2 * _point_fraction(params, h) * l)


# --------------------------------------------------------------------------
# probabilities and interval statistics
# --------------------------------------------------------------------------

def _point_exponent(params: ScenarioParams) -> float:
    return params.lam * eta_x(params) * mean_length(params) * params.r


def _los_rate(params: ScenarioParams) -> float:
    """Rate of the exponential LOS-length law, per meter."""
    return params.lam * eta_tilde(params) * params.r / 2


def p_los_point(params: ScenarioParams) -> float:
    return math.exp(-_point_exponent(params))


def p_segment_los(params: ScenarioParams, z: float) -> float:
    return math.exp(-params.lam * params.r / 2 * (eta_tilde(params) * z + 2 * eta_x(params) * mean_length(params)))


def cdf_los_bound(params: ScenarioParams, z):
    """Upper bound on P(Z <= z) for the LOS-interval length. Accepts arrays."""
    out = -np.expm1(-_los_rate(params) * np.asarray(z, dtype=float))
    return float(out) if np.ndim(z) == 0 else out


def pdf_los_approx(params: ScenarioParams, z):
    rate = _los_rate(params)
    out = rate * np.exp(-rate * np.asarray(z, dtype=float))
    return float(out) if np.ndim(z) == 0 else out


def mean_los_length(params: ScenarioParams) -> float:
    return 2 / (params.lam * eta_tilde(params) * params.r)


def mean_nlos_length(params: ScenarioParams) -> float:
    return 2 * math.expm1(_point_exponent(params)) / (params.lam * eta_tilde(params) * params.r)


def interval_density(params: ScenarioParams) -> float:
    """Expected number of LOS (equivalently NLOS) intervals per meter."""
    return _los_rate(params) * math.exp(-_point_exponent(params))


def critical_radii(params: ScenarioParams) -> tuple[float, float]:
    """``(r_max_density, r_equal)``: where interval density peaks and where
    mean LOS and NLOS lengths coincide."""
    scale = 1 / (params.lam * eta_x(params) * mean_length(params))
    return scale, math.log(2) * scale


def max_density_value(params: ScenarioParams) -> float:
    return eta_tilde(params) / eta_x(params) / (2 * mean_length(params) * math.e)


def equal_length_value(params: ScenarioParams) -> float:
    return eta_x(params) / eta_tilde(params) * mean_length(params) * 2 / math.log(2)


@dataclass(frozen=True)
class AnalyticSummary:
    eta_x: float
    eta_tilde: float
    p_los_point: float
    p_nlos_point: float
    mean_los_len: float
    mean_nlos_len: float
    density_per_m: float
    r_max_density: float
    r_equal_lengths: float
    max_density_value: float
    equal_length_value: float

    def as_json(self) -> dict:
        return {
            "eta_x": self.eta_x,
            "eta_tilde": self.eta_tilde,
            "p_los": self.p_los_point,
            "p_nlos": self.p_nlos_point,
            "mean_Z": self.mean_los_len,
            "mean_S": self.mean_nlos_len,
            "density": self.density_per_m,
            "r_max_density": self.r_max_density,
            "r_equal": self.r_equal_lengths,
            "max_density_value": self.max_density_value,
            "equal_length_value": self.equal_length_value,
        }

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(params: ScenarioParams) -> AnalyticSummary:
    p_los = p_los_point(params)
    r_peak, r_eq = critical_radii(params)
    return AnalyticSummary(
        eta_x=eta_x(params),
        eta_tilde=eta_tilde(params),
        p_los_point=p_los,
        p_nlos_point=-math.expm1(-_point_exponent(params)),
        mean_los_len=mean_los_length(params),
        mean_nlos_len=mean_nlos_length(params),
        density_per_m=interval_density(params),
        r_max_density=r_peak,
        r_equal_lengths=r_eq,
        max_density_value=max_density_value(params),
        equal_length_value=equal_length_value(params),
    )
