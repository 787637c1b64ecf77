from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from blockage_geom.model import (
    BASELINE,
    Building,
    HeightRegime,
    ScenarioParams,
    ValidationError,
    height_regime,
    mean_length,
    validate,
)


def test_baseline_is_valid_and_within(baseline):
    assert validate(baseline) is baseline
    assert height_regime(baseline) is HeightRegime.BS_WITHIN


def test_equal_bs_and_user_height_rejected():
    p = replace(BASELINE, h_bs=10.0, h_user=10.0)
    with pytest.raises(ValidationError) as e:
        validate(p)
    assert e.value.field == "h_bs"


def test_inverted_length_support_rejected():
    with pytest.raises(ValidationError) as e:
        validate(replace(BASELINE, l_min=30.0, l_max=10.0))
    assert e.value.field == "l_max"


@pytest.mark.parametrize(
    "change, field",
    [
        (dict(lam=0.0), "lambda"),
        (dict(lam=-1e-4), "lambda"),
        (dict(r=0.0), "r"),
        (dict(d=-1.0), "d"),
        (dict(l_min=0.0), "l_min"),
        (dict(h_min=-1.0, h_user=-2.0), "h_min"),
        (dict(h_min=31.0), "h_max"),
        (dict(h_user=12.0), "h_user"),
        (dict(r=float("nan")), "r"),
    ],
)
def test_invariant_violations_name_field(change, field):
    with pytest.raises(ValidationError) as e:
        validate(replace(BASELINE, **change))
    assert e.value.field == field


@pytest.mark.parametrize("lo, hi, expected", [(10, 30, 20), (5, 5, 5), (0.1, 0.3, 0.2)])
def test_mean_length(lo, hi, expected):
    p = replace(BASELINE, l_min=lo, l_max=hi)
    assert mean_length(p) == pytest.approx(expected, rel=1e-15)
    assert p.mean_length() == mean_length(p)


@pytest.mark.parametrize(
    "h_bs, regime",
    [(5, HeightRegime.BS_BELOW_ALL), (10, HeightRegime.BS_WITHIN), (30, HeightRegime.BS_WITHIN),
     (30.0001, HeightRegime.BS_ABOVE_ALL)],
)
def test_regime_boundaries(h_bs, regime):
    assert height_regime(replace(BASELINE, h_bs=h_bs)) is regime


@given(
    h_bs=st.floats(1.6, 200),
    h_min=st.floats(1.5, 100),
    span=st.floats(0, 100),
)
def test_regime_exhaustive_and_exclusive(h_bs, h_min, span):
    p = replace(BASELINE, h_bs=h_bs, h_min=h_min, h_max=h_min + span)
    flags = [h_bs < p.h_min, p.h_min <= h_bs <= p.h_max, h_bs > p.h_max]
    assert sum(flags) == 1
    assert [HeightRegime.BS_BELOW_ALL, HeightRegime.BS_WITHIN, HeightRegime.BS_ABOVE_ALL][flags.index(True)] is height_regime(p)


def test_validate_idempotent(baseline):
    assert validate(validate(baseline)) == validate(baseline)


def test_dict_round_trip(baseline):
    d = baseline.to_dict()
    assert d["lambda"] == baseline.lam
    assert ScenarioParams.from_dict(d) == baseline


def test_from_dict_missing_field():
    d = BASELINE.to_dict()
    del d["h_bs"]
    with pytest.raises(ValidationError, match="h_bs"):
        ScenarioParams.from_dict(d)


def test_building_rejects_nonpositive_length():
    with pytest.raises(ValidationError):
        Building(0.0, 10.0, 0.0, 5.0)
    b = Building(50.0, 50.0, 20.0, 30.0)
    assert (b.u_lo, b.u_hi) == (40.0, 60.0)
