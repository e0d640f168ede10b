"""Widening of raw weight bands in proportion to the cross-network flow imbalance."""
from __future__ import annotations

from dataclasses import dataclass

from bridgeflow.types import (
    AssetWeightBand,
    BridgeflowError,
    DegenerateDenominator,
    StretchResult,
    UndefinedRatio,
)

DEFAULT_MAX_STRETCH = 0.2


@dataclass(frozen=True)
class NetworkFlowEstimate:
    """Expected pending flow and invested amount for one network.

    Either actuals since the last rebalance or forecasts from
    :mod:`bridgeflow.forecast`.
    """

    tbd_estimate: float
    current_estimate: float

    def __post_init__(self):
        if self.current_estimate < 0:
            raise BridgeflowError("current_estimate must be >= 0")

    @classmethod
    def from_state(cls, state) -> "NetworkFlowEstimate":
        return cls(state.tbd, state.current_total)


def need_ratio(est: NetworkFlowEstimate) -> float:
    """Pending flow relative to invested capital; 0/0 counts as no need."""
    if est.current_estimate == 0:
        if est.tbd_estimate == 0:
            return 0.0
        raise UndefinedRatio(
            f"tbd={est.tbd_estimate} on a network with no invested capital"
        )
    return est.tbd_estimate / est.current_estimate


def collect_deploy_diff(p: NetworkFlowEstimate, q: NetworkFlowEstimate) -> float:
    return abs(need_ratio(p) - need_ratio(q))


def bridge_stretch(
    p: NetworkFlowEstimate, q: NetworkFlowEstimate, bridge_capacity_pq: float
) -> float:
    """Uncapped stretch factor for the P->Q bridge.

    Scales the ratio imbalance by one plus the net pending flow relative to
    capital on both sides plus the P->Q capacity.
    """
    diff = collect_deploy_diff(p, q)
    numer = p.tbd_estimate + q.tbd_estimate
    denom = p.current_estimate + q.current_estimate + bridge_capacity_pq
    if denom == 0:
        if numer != 0:
            raise DegenerateDenominator(
                "no invested capital and no bridge capacity, but nonzero flow"
            )
        return diff
    return diff * (1.0 + numer / denom)


def cap_stretch(raw_stretch: float, max_stretch: float = DEFAULT_MAX_STRETCH) -> float:
    if max_stretch < 0:
        raise BridgeflowError("max_stretch must be >= 0")
    return min(abs(raw_stretch), max_stretch)


def stretch_result(
    p: NetworkFlowEstimate,
    q: NetworkFlowEstimate,
    bridge_capacity_pq: float,
    max_stretch: float = DEFAULT_MAX_STRETCH,
) -> StretchResult:
    diff = collect_deploy_diff(p, q)
    raw = bridge_stretch(p, q, bridge_capacity_pq)
    return StretchResult(diff, raw, cap_stretch(raw, max_stretch), max_stretch)


def stretch_band(band: AssetWeightBand, stretch: float) -> AssetWeightBand:
    """Widen min and max by ``stretch``; the ideal weight is left alone."""
    if stretch < 0:
        raise BridgeflowError("stretch must be >= 0")
    return AssetWeightBand(
        band.raw_min,
        band.raw_ideal,
        band.raw_max,
        stretched_min=band.raw_min * (1.0 - stretch),
        stretched_max=band.raw_max * (1.0 + stretch),
    )
