"""Scenario parameters and building records.

All quantities are SI: meters for lengths and heights, buildings per square
meter for the density.  Building lengths and heights are uniform on
``[l_min, l_max]`` and ``[h_min, h_max]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np


class ValidationError(ValueError):
    """Raised when scenario parameters break a model invariant.

    ``field`` names the offending parameter so callers (the CLI in
    particular) can report it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class HeightRegime(enum.Enum):
    BS_BELOW_ALL = "bs_below_all"
    BS_WITHIN = "bs_within"
    BS_ABOVE_ALL = "bs_above_all"


@dataclass(frozen=True)
class ScenarioParams:
    lam: float
    r: float
    d: float
    h_bs: float
    h_user: float
    l_min: float
    l_max: float
    h_min: float
    h_max: float

    @property
    def regime(self) -> HeightRegime:
        return height_regime(self)

    def mean_length(self) -> float:
        return mean_length(self)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["lambda"] = out.pop("lam")
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioParams":
        """Build from a mapping using ``lambda`` (or ``lam``) as density key."""
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        kwargs = {}
        for f in fields(cls):
            if f.name not in data:
                raise ValidationError("lambda" if f.name == "lam" else f.name, "missing")
            try:
                kwargs[f.name] = float(data[f.name])
            except (TypeError, ValueError):
                raise ValidationError(f.name, f"not a number: {data[f.name]!r}") from None
        return cls(**kwargs)


@dataclass(frozen=True)
class Building:
    """A zero-thickness blocking segment parallel to the trajectory.

    ``cu`` is the center along the street axis and ``cv`` the distance of the
    segment's line from the BS baseline, both in BS-centered coordinates.
    """

    cu: float
    cv: float
    length: float
    height: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValidationError("length", f"must be > 0, got {self.length}")
        if not self.height >= 0:
            raise ValidationError("height", f"must be >= 0, got {self.height}")

    @property
    def u_lo(self) -> float:
        return self.cu - self.length / 2

    @property
    def u_hi(self) -> float:
        return self.cu + self.length / 2


def height_regime(params: ScenarioParams) -> HeightRegime:
    if params.h_bs < params.h_min:
        return HeightRegime.BS_BELOW_ALL
    if params.h_bs > params.h_max:
        return HeightRegime.BS_ABOVE_ALL
    return HeightRegime.BS_WITHIN


def validate(params: ScenarioParams) -> ScenarioParams:
    """Return ``params`` unchanged if every invariant holds.

    Raises ValidationError naming the first violated field otherwise.
    """
    p = params
    for f in fields(p):
        value = getattr(p, f.name)
        if not math.isfinite(value):
            raise ValidationError("lambda" if f.name == "lam" else f.name, "must be finite")
    if not p.lam > 0:
        raise ValidationError("lambda", f"must be > 0, got {p.lam}")
    if not p.r > 0:
        raise ValidationError("r", f"must be > 0, got {p.r}")
    if not p.d > 0:
        raise ValidationError("d", f"must be > 0, got {p.d}")
    if not p.l_min > 0:
        raise ValidationError("l_min", f"must be > 0, got {p.l_min}")
    if p.l_min > p.l_max:
        raise ValidationError("l_max", f"l_min={p.l_min} exceeds l_max={p.l_max}")
    if p.h_min < 0:
        raise ValidationError("h_min", f"must be >= 0, got {p.h_min}")
    if p.h_min > p.h_max:
        raise ValidationError("h_max", f"h_min={p.h_min} exceeds h_max={p.h_max}")
    if p.h_user > p.h_min:
        raise ValidationError("h_user", f"h_user={p.h_user} exceeds h_min={p.h_min}")
    # every blocking-area formula divides by h_bs - h_user
    if not p.h_user < p.h_bs:
        raise ValidationError("h_bs", f"h_bs={p.h_bs} must be strictly above h_user={p.h_user}")
    return p


def mean_length(params: ScenarioParams) -> float:
    return (params.l_min + params.l_max) / 2


def sample_lengths(params: ScenarioParams, rng: np.random.Generator, n: int) -> np.ndarray:
    return params.l_min + (params.l_max - params.l_min) * rng.random(n)


def sample_heights(params: ScenarioParams, rng: np.random.Generator, n: int) -> np.ndarray:
    return params.h_min + (params.h_max - params.h_min) * rng.random(n)


BASELINE = ScenarioParams(
    lam=3.22e-4, r=100.0, d=1000.0, h_bs=25.0, h_user=1.5,
    l_min=10.0, l_max=30.0, h_min=10.0, h_max=30.0,
)
