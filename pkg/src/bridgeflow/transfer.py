"""Band breaches, send/receive headroom and bridge transfer amounts.

Two formulations are provided. :func:`transfer_simple` moves only what
lies outside a band against the counterparty's headroom.
:func:`transfer_delta` additionally lets a sender above its band push
towards a counterparty's redemption shortfall within one round.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from bridgeflow.allocation import CapacityBand, TrimConfig, capacity_bands, capacity_totals
from bridgeflow.stretch import DEFAULT_MAX_STRETCH, NetworkFlowEstimate, stretch_result
from bridgeflow.types import (
    REL_TOL,
    AssetListing,
    BandAssessment,
    BridgeflowError,
    BridgeLink,
    NetworkState,
    StretchResult,
    TransferDecision,
    validate_scenario,
)

DEFAULT_DELTA = 0.0001

MULTI_ROUND = "MULTI_ROUND"
DELTA_ASYMMETRIC = "DELTA_ASYMMETRIC"
BAND_INVERTED = "BAND_INVERTED"
CAPACITY_INFEASIBLE = "CAPACITY_INFEASIBLE"


def assess_band(total_with_tbd: float, band: CapacityBand) -> BandAssessment:
    below = total_with_tbd - band.min_capacity
    above = total_with_tbd - band.max_capacity
    return BandAssessment(
        total_with_tbd=total_with_tbd,
        min_capacity=band.min_capacity,
        max_capacity=band.max_capacity,
        outside_band=min(below, 0.0) + max(above, 0.0),
        max_send=max(below, 0.0),
        max_receive=max(band.max_capacity - total_with_tbd, 0.0),
    )


def positivity_indicator(x: float, delta: float = DEFAULT_DELTA) -> float:
    """1 for x >= 0 and 0 for x < 0, written without a branch.

    Exact only when x == 0 or |x| >= delta.
    """
    if delta <= 0:
        raise BridgeflowError("delta must be positive")
    return max(x + delta, 0.0) / (abs(x) + delta)


def send_term(outside_sender: float, receive_receiver: float, cap_out: float) -> float:
    """Outbound leg: the sender's excess, bounded by receiver headroom and capacity."""
    return min(max(min(outside_sender, receive_receiver), 0.0), cap_out)


def receive_term(outside_self: float, send_other: float, cap_in: float) -> float:
    """Inbound leg (<= 0): the shortfall the counterparty can cover."""
    return max(min(max(outside_self, -send_other), 0.0), -cap_in)


def delta_send_term(
    outside_sender: float,
    outside_receiver: float,
    receive_receiver: float,
    send_sender: float,
    cap_out: float,
    delta: float = DEFAULT_DELTA,
) -> float:
    gated = max(outside_sender, -outside_receiver) * positivity_indicator(outside_sender, delta)
    return min(max(min(gated, receive_receiver, send_sender), 0.0), cap_out)


def transfer_simple(
    a_p: BandAssessment, a_q: BandAssessment, bridge: BridgeLink
) -> tuple[float, float]:
    pq = send_term(a_p.outside_band, a_q.max_receive, bridge.cap_pq) + receive_term(
        a_p.outside_band, a_q.max_send, bridge.cap_qp
    )
    qp = send_term(a_q.outside_band, a_p.max_receive, bridge.cap_qp) + receive_term(
        a_q.outside_band, a_p.max_send, bridge.cap_pq
    )
    return pq, qp


def transfer_delta(
    a_p: BandAssessment,
    a_q: BandAssessment,
    bridge: BridgeLink,
    delta: float = DEFAULT_DELTA,
) -> tuple[float, float]:
    pq = delta_send_term(
        a_p.outside_band, a_q.outside_band, a_q.max_receive, a_p.max_send, bridge.cap_pq, delta
    ) + receive_term(a_p.outside_band, a_q.max_send, bridge.cap_qp)
    qp = delta_send_term(
        a_q.outside_band, a_p.outside_band, a_p.max_receive, a_q.max_send, bridge.cap_qp, delta
    ) + receive_term(a_q.outside_band, a_p.max_send, bridge.cap_pq)
    return pq, qp


def decide(
    a_p: BandAssessment, a_q: BandAssessment, bridge: BridgeLink, delta: float = DEFAULT_DELTA
) -> TransferDecision:
    simple_pq, simple_qp = transfer_simple(a_p, a_q, bridge)
    delta_pq, delta_qp = transfer_delta(a_p, a_q, bridge, delta)
    # + 0.0 folds -0.0 into 0.0
    return TransferDecision(simple_pq + 0.0, simple_qp + 0.0, delta_pq + 0.0, delta_qp + 0.0)


def reconcile(pq: float, qp: float) -> float:
    """Signed P->Q amount both one-sided views agree on.

    ``pq`` is P's view and ``-qp`` is Q's view of the P->Q flow. When they
    point the same way the smaller magnitude is returned; otherwise 0.
    """
    a, b = pq, -qp
    if a * b <= 0:
        return 0.0
    return a if abs(a) <= abs(b) else b


def _tol(x: float) -> float:
    return REL_TOL * max(1.0, abs(x))


@dataclass(frozen=True)
class PipelineResult:
    """Every intermediate produced for one pair of networks."""

    stretch: StretchResult
    bridge: BridgeLink
    band_p: CapacityBand
    band_q: CapacityBand
    assessment_p: BandAssessment
    assessment_q: BandAssessment
    decision: TransferDecision
    delta: float
    net_pq: float
    net_delta_pq: float
    residual_p: float
    residual_q: float
    flags: frozenset = field(default_factory=frozenset)
    network_ids: tuple = ("P", "Q")
    assets: tuple = ()
    cfg: TrimConfig = TrimConfig()

    @property
    def total_pq(self) -> float:
        return self.assessment_p.total_with_tbd + self.assessment_q.total_with_tbd

    def network_bands(self) -> dict:
        """Per-asset network bands behind each capacity band, keyed by network id."""
        totals = dict(zip(self.network_ids, (self.assessment_p.total_with_tbd,
                                             self.assessment_q.total_with_tbd)))
        _, per_network = capacity_bands(
            self.network_ids, totals, self.assets, self.stretch.capped_stretch, self.cfg
        )
        return {n: tuple(bands) for n, bands in per_network.items()}

    def terms(self) -> dict:
        """Component values of both formulations, keyed by report column."""
        a_p, a_q = self.assessment_p, self.assessment_q
        d = self.delta
        cap_pq, cap_qp = self.bridge.cap_pq, self.bridge.cap_qp
        terms = {
            "outsideBand_PQ_D": max(a_p.outside_band, -a_q.outside_band),
            "outsideBand_QP_D": max(a_q.outside_band, -a_p.outside_band),
            "outsideBand_Positive_P": positivity_indicator(a_p.outside_band, d),
            "outsideBand_Positive_Q": positivity_indicator(a_q.outside_band, d),
            "transfer_PQ_First_D": delta_send_term(
                a_p.outside_band, a_q.outside_band, a_q.max_receive, a_p.max_send, cap_pq, d
            ),
            "transfer_PQ_First": send_term(a_p.outside_band, a_q.max_receive, cap_pq),
            "transfer_PQ_Second": receive_term(a_p.outside_band, a_q.max_send, cap_qp),
            "transfer_QP_First_D": delta_send_term(
                a_q.outside_band, a_p.outside_band, a_p.max_receive, a_q.max_send, cap_qp, d
            ),
            "transfer_QP_First": send_term(a_q.outside_band, a_p.max_receive, cap_qp),
            "transfer_QP_Second": receive_term(a_q.outside_band, a_p.max_send, cap_pq),
        }
        return {k: v + 0.0 for k, v in terms.items()}


def diagnose(
    a_p: BandAssessment, a_q: BandAssessment, decision: TransferDecision
) -> tuple[float, float, float, frozenset]:
    """Agreed P->Q amount under the simple formulation, unmet shortfall, and flags."""
    flags = set()
    net = reconcile(decision.simple_pq, decision.simple_qp)
    residual_p = residual_q = 0.0
    if a_p.outside_band < 0:
        residual_p = max(-a_p.outside_band - max(-net, 0.0), 0.0)
    if a_q.outside_band < 0:
        residual_q = max(-a_q.outside_band - max(net, 0.0), 0.0)
    if residual_p > _tol(a_p.outside_band) or residual_q > _tol(a_q.outside_band):
        flags.add(MULTI_ROUND)
    if decision.delta_pq + decision.delta_qp != 0:
        flags.add(DELTA_ASYMMETRIC)
    for a in (a_p, a_q):
        if a.min_capacity > a.max_capacity:
            flags.add(BAND_INVERTED)
    total = a_p.total_with_tbd + a_q.total_with_tbd
    lo = a_p.min_capacity + a_q.min_capacity
    hi = a_p.max_capacity + a_q.max_capacity
    if lo > total + _tol(total) or hi < total - _tol(total):
        flags.add(CAPACITY_INFEASIBLE)
    return net, residual_p, residual_q, frozenset(flags)


def pipeline(
    p: NetworkState,
    q: NetworkState,
    bridge: BridgeLink,
    assets: Sequence[AssetListing],
    cfg: TrimConfig = TrimConfig(),
    max_stretch: float = DEFAULT_MAX_STRETCH,
    delta: float = DEFAULT_DELTA,
    estimates: Optional[tuple[NetworkFlowEstimate, NetworkFlowEstimate]] = None,
) -> PipelineResult:
    """Run the full two-network calculation from pending flows to transfers.

    ``assets`` carry the raw global bands; their ``available_on`` sets refer
    to ``p.network_id`` and ``q.network_id``. ``estimates`` replaces the
    observed flows when sizing the stretch factor (for example with
    forecasts); bands and transfers always use the observed states.
    """
    if p.network_id == q.network_id:
        raise BridgeflowError("the two networks need distinct ids")
    validate_scenario(p, q, bridge)
    if estimates is None:
        estimates = (NetworkFlowEstimate.from_state(p), NetworkFlowEstimate.from_state(q))
    sr = stretch_result(estimates[0], estimates[1], bridge.cap_pq, max_stretch)

    ids = (p.network_id, q.network_id)
    totals = {p.network_id: p.total_with_tbd, q.network_id: q.total_with_tbd}
    bands = capacity_totals(ids, totals, assets, sr.capped_stretch, cfg)

    a_p = assess_band(totals[ids[0]], bands[ids[0]])
    a_q = assess_band(totals[ids[1]], bands[ids[1]])
    decision = decide(a_p, a_q, bridge, delta)
    net, res_p, res_q, flags = diagnose(a_p, a_q, decision)
    return PipelineResult(
        stretch=sr,
        bridge=bridge,
        band_p=bands[ids[0]],
        band_q=bands[ids[1]],
        assessment_p=a_p,
        assessment_q=a_q,
        decision=decision,
        delta=delta,
        net_pq=net,
        net_delta_pq=reconcile(decision.delta_pq, decision.delta_qp),
        residual_p=res_p,
        residual_q=res_q,
        flags=flags,
        network_ids=ids,
        assets=tuple(assets),
        cfg=cfg,
    )
