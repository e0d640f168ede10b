"""Greedy pairwise routing of transfers among more than two networks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Optional, Sequence

from bridgeflow.allocation import TrimConfig, capacity_totals
from bridgeflow.stretch import (
    DEFAULT_MAX_STRETCH,
    NetworkFlowEstimate,
    stretch_result,
)
from bridgeflow.transfer import DEFAULT_DELTA, assess_band, decide, reconcile
from bridgeflow.types import (
    AssetListing,
    BandAssessment,
    BridgeflowError,
    BridgeLink,
    NetworkState,
    TransferDecision,
    validate_networks,
)


@dataclass(frozen=True)
class NetworkNeed:
    network_id: Hashable
    need_ratio: float
    assessment: Optional[BandAssessment] = None


def sort_by_need(networks: Sequence[NetworkNeed]) -> list[NetworkNeed]:
    """Highest outflow need first; equal ratios fall back to id order."""
    if len(networks) < 2:
        raise BridgeflowError("need at least two networks to rank")
    return sorted(networks, key=lambda n: (-n.need_ratio, str(n.network_id)))


def _inflow_order(networks: Sequence[NetworkNeed]) -> list[NetworkNeed]:
    return sorted(networks, key=lambda n: (n.need_ratio, str(n.network_id)))


def _ratio(tbd: float, current: float) -> float:
    if current == 0:
        if tbd == 0:
            return 0.0
        return float("inf") if tbd > 0 else float("-inf")
    return tbd / current


@dataclass(frozen=True)
class PairTransfer:
    """Outcome of one pair visit; ``amount`` > 0 moves funds from ``a`` to ``b``."""

    a: Hashable
    b: Hashable
    decision: TransferDecision
    amount: float


@dataclass
class RoutingResult:
    transfers: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    assessments: dict = field(default_factory=dict)
    stretch: float = 0.0
    iterations: int = 0
    residual_history: list = field(default_factory=list)

    def decision_for(self, a, b) -> TransferDecision:
        """Decision recorded for the pair, oriented as ``(a, b)``; zero if never moved."""
        for t in self.transfers:
            if (t.a, t.b) == (a, b):
                return t.decision
            if (t.a, t.b) == (b, a):
                return t.decision.swapped()
        return TransferDecision.zero()

    def net_flows(self) -> dict:
        flows = dict.fromkeys(self.residuals, 0.0)
        for t in self.transfers:
            flows[t.a] -= t.amount
            flows[t.b] += t.amount
        return flows


def _capacity_lookup(bridges: Mapping, ids: Sequence) -> dict:
    caps = {}
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            if (a, b) in bridges:
                link = bridges[(a, b)]
            elif (b, a) in bridges:
                link = bridges[(b, a)].reversed()
            else:
                raise BridgeflowError(f"no bridge defined between {a!r} and {b!r}")
            caps[(a, b)] = link.cap_pq
            caps[(b, a)] = link.cap_qp
    return caps


def round_robin_route(
    networks: Sequence[NetworkState],
    assets: Sequence[AssetListing],
    bridges: Mapping[tuple, BridgeLink],
    max_iterations: Optional[int] = None,
    cfg: TrimConfig = TrimConfig(),
    delta: float = DEFAULT_DELTA,
    max_stretch: float = DEFAULT_MAX_STRETCH,
) -> RoutingResult:
    """Match networks pairwise by need and run the two-network calculus on each pair.

    Bands are sized once for all networks together. The stretch factor is
    the largest capped pairwise stretch over pairs taken in input order.
    Each iteration visits the not-yet-visited pair formed by the highest
    outflow-need network and the highest inflow-need network, applies the
    agreed amount of the Δ formulation, then reassesses both ends and
    draws down the directed capacity used. Routing ends when every pair
    has been visited, ``max_iterations`` is reached, every network sits
    inside its band, or no bridge capacity is left.

    ``bridges`` maps ``(a, b)`` to a link whose ``cap_pq`` is the a->b
    capacity; either orientation may be supplied.
    """
    ids = [n.network_id for n in networks]
    if len(ids) < 2:
        raise BridgeflowError("routing needs at least two networks")
    if len(set(ids)) != len(ids):
        raise BridgeflowError("network ids must be unique")
    validate_networks(networks)
    if max_iterations is None:
        max_iterations = len(ids) * (len(ids) - 1)
    if max_iterations < 1:
        raise BridgeflowError("max_iterations must be >= 1")

    caps = _capacity_lookup(bridges, ids)
    estimates = {n.network_id: NetworkFlowEstimate.from_state(n) for n in networks}
    stretch = 0.0
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            sr = stretch_result(estimates[a], estimates[b], caps[(a, b)], max_stretch)
            stretch = max(stretch, sr.capped_stretch)

    totals = {n.network_id: n.total_with_tbd for n in networks}
    current = {n.network_id: n.current_total for n in networks}
    tbd = {n.network_id: n.tbd for n in networks}
    bands = capacity_totals(ids, totals, assets, stretch, cfg)
    order = {n: i for i, n in enumerate(ids)}

    def assess(n):
        return assess_band(totals[n], bands[n])

    result = RoutingResult(stretch=stretch)
    assessments = {n: assess(n) for n in ids}
    result.residual_history.append(sum(abs(a.outside_band) for a in assessments.values()))
    visited = set()
    while result.iterations < max_iterations:
        if all(a.outside_band == 0 for a in assessments.values()):
            break
        if not any(caps.values()):
            break
        needs = [NetworkNeed(n, _ratio(tbd[n], current[n]), assessments[n]) for n in ids]
        pair = None
        for s in sort_by_need(needs):
            for r in _inflow_order(needs):
                key = frozenset((s.network_id, r.network_id))
                if s.network_id != r.network_id and key not in visited:
                    pair = key
                    break
            if pair is not None:
                break
        if pair is None:
            break
        visited.add(pair)
        a, b = sorted(pair, key=order.__getitem__)
        link = BridgeLink(caps[(a, b)], caps[(b, a)])
        decision = decide(assessments[a], assessments[b], link, delta)
        amount = reconcile(decision.delta_pq, decision.delta_qp)
        result.iterations += 1
        if not decision.is_zero():
            result.transfers.append(PairTransfer(a, b, decision, amount))
        if amount:
            totals[a] -= amount
            totals[b] += amount
            tbd[a] -= amount
            tbd[b] += amount
            if amount > 0:
                caps[(a, b)] = max(caps[(a, b)] - amount, 0.0)
            else:
                caps[(b, a)] = max(caps[(b, a)] + amount, 0.0)
            assessments[a] = assess(a)
            assessments[b] = assess(b)
        result.residual_history.append(sum(abs(x.outside_band) for x in assessments.values()))

    result.assessments = assessments
    result.residuals = {n: assessments[n].outside_band for n in ids}
    return result
