"""LOS/NLOS interval statistics along a street trajectory blocked by
Poisson-distributed line buildings: closed forms, Monte Carlo, layouts."""

from .analytic import (
    AnalyticSummary,
    blocking_area_point,
    blocking_area_segment,
    cdf_los_bound,
    critical_radii,
    eta_tilde,
    eta_tilde_quadrature,
    eta_x,
    eta_x_quadrature,
    interval_density,
    mean_los_length,
    mean_nlos_length,
    p_los_point,
    p_segment_los,
    pdf_los_approx,
    summarize,
)
from .geometry import (
    DomainError,
    Interval,
    IntervalSet,
    Kind,
    brute_force_intervals,
    merge_shadows,
    shadow_of_building,
)
from .model import (
    BASELINE,
    Building,
    HeightRegime,
    ScenarioParams,
    ValidationError,
    height_regime,
    mean_length,
    validate,
)

__version__ = "0.1.0"
