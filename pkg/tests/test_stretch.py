import pytest
from hypothesis import given, strategies as st

from bridgeflow import (
    AssetWeightBand,
    DegenerateDenominator,
    NetworkFlowEstimate as E,
    UndefinedRatio,
    bridge_stretch,
    cap_stretch,
    collect_deploy_diff,
    stretch_band,
)
from bridgeflow.stretch import DEFAULT_MAX_STRETCH, stretch_result


@pytest.mark.parametrize(
    "p, q, expected",
    [
        (E(100, 1000), E(-50, 500), 0.2),
        (E(0, 1000), E(0, 500), 0.0),
        (E(200, 800), E(100, 400), 0.0),
        (E(0, 0), E(50, 500), 0.1),
    ],
)
def test_collect_deploy_diff(p, q, expected):
    assert collect_deploy_diff(p, q) == pytest.approx(expected, abs=1e-15)


def test_undefined_ratio():
    with pytest.raises(UndefinedRatio):
        collect_deploy_diff(E(10, 0), E(0, 100))


@pytest.mark.parametrize(
    "p, q, cap, expected",
    [
        (E(100, 1000), E(-50, 500), 500, 0.205),
        (E(-300, 1000), E(0, 500), 0, 0.24),
        (E(0, 1000), E(0, 300), 77, 0.0),
    ],
)
def test_bridge_stretch(p, q, cap, expected):
    assert bridge_stretch(p, q, cap) == pytest.approx(expected, rel=1e-12, abs=1e-15)


def test_degenerate_denominator():
    assert bridge_stretch(E(0, 0), E(0, 0), 0) == 0.0
    with pytest.raises(UndefinedRatio):
        bridge_stretch(E(5, 0), E(-5, 0), 0)


def test_degenerate_denominator_raised_for_estimates():
    # a forecast can carry a nonzero tbd against zero capital only through
    # the ratio path, so the denominator guard is reached with zero ratios
    with pytest.raises((DegenerateDenominator, UndefinedRatio)):
        bridge_stretch(E(0, 0), E(3, 0), 0)


@pytest.mark.parametrize("raw, cap, expected", [(0.205, 0.2, 0.2), (0.1, 0.2, 0.1), (-0.05, 0.2, 0.05)])
def test_cap_stretch(raw, cap, expected):
    assert cap_stretch(raw, cap) == pytest.approx(expected)


def test_default_max_stretch():
    assert DEFAULT_MAX_STRETCH == 0.2
    r = stretch_result(E(100, 1000), E(-50, 500), 500)
    assert r.cap == 0.2 and r.capped_stretch == 0.2
    assert r.raw_stretch == pytest.approx(0.205)


@pytest.mark.parametrize(
    "band, s, lo, hi",
    [
        ((0.10, 0.15, 0.20), 0.2, 0.08, 0.24),
        ((0.10, 0.15, 0.20), 0.0, 0.10, 0.20),
        ((0.0, 0.0, 0.5), 0.2, 0.0, 0.6),
    ],
)
def test_stretch_band(band, s, lo, hi):
    out = stretch_band(AssetWeightBand(*band), s)
    assert out.stretched_min == pytest.approx(lo)
    assert out.stretched_max == pytest.approx(hi)
    assert out.raw_ideal == band[1]


@given(
    st.floats(-10, 10, allow_nan=False),
    st.floats(0, 5, allow_nan=False),
)
def test_cap_stretch_range(raw, cap):
    assert 0 <= cap_stretch(raw, cap) <= cap


@given(
    st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.999)
)
def test_stretch_band_keeps_order(a, b, c, s):
    lo, mid, hi = sorted((a, b, c))
    out = stretch_band(AssetWeightBand(lo, mid, hi), s)
    assert out.stretched_min <= mid <= out.stretched_max
    assert out.stretched_min <= lo and out.stretched_max >= hi


@given(
    st.floats(1, 1e6), st.floats(1, 1e6), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1e6)
)
def test_stretch_nonnegative_on_valid_scenarios(cp, cq, up, uq, cap):
    invested = cp + cq
    tbd_p = -invested + up * (invested + 1e6)
    tbd_q = -invested + max(-tbd_p, 0) + uq * (invested - max(-tbd_p, 0) + 1e6)
    assert bridge_stretch(E(tbd_p, cp), E(tbd_q, cq), cap) >= -1e-12
