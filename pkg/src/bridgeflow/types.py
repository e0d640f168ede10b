"""Domain values shared by every stage of the allocation algorithm.

All amounts are plain floats in USD. Every value type is a frozen
dataclass; derived copies are made with :func:`dataclasses.replace`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

REL_TOL = 1e-9


class BridgeflowError(ValueError):
    """Base class for domain errors raised by this package."""


class WithdrawalExceedsInvestment(BridgeflowError):
    pass


class NegativeAmount(BridgeflowError):
    pass


class UndefinedRatio(BridgeflowError):
    """A network holds no capital but has a nonzero pending flow."""


class DegenerateDenominator(BridgeflowError):
    pass


class UndefinedShare(BridgeflowError):
    pass


class OutOfRange(BridgeflowError):
    pass


class InsufficientHistory(BridgeflowError):
    pass


def close(a: float, b: float) -> bool:
    """Equality at the package tolerance of 1e-9 * max(1, |value|)."""
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class AssetPosition:
    asset_id: Hashable
    quantity: float
    price: float
    available: bool = True

    def __post_init__(self):
        if self.quantity < 0 or self.price < 0:
            raise NegativeAmount(
                f"asset {self.asset_id!r}: quantity and price must be >= 0"
            )

    @property
    def notional(self) -> float:
        return self.quantity * self.price


@dataclass(frozen=True)
class NetworkState:
    """Capital invested on one network plus the flow pending since last rebalance.

    ``tbd`` is deposits minus withdrawals; negative means a net redemption.
    """

    network_id: Hashable
    current_total: float
    tbd: float = 0.0
    positions: Optional[tuple] = None

    def __post_init__(self):
        if not math.isfinite(self.current_total) or not math.isfinite(self.tbd):
            raise BridgeflowError(f"network {self.network_id!r}: amounts must be finite")
        if self.current_total < 0:
            raise NegativeAmount(
                f"network {self.network_id!r}: current_total={self.current_total} < 0"
            )
        if self.positions is not None:
            object.__setattr__(self, "positions", tuple(self.positions))
            held = sum(p.notional for p in self.positions)
            if not close(held, self.current_total):
                raise BridgeflowError(
                    f"network {self.network_id!r}: positions sum to {held}, "
                    f"current_total is {self.current_total}"
                )

    @classmethod
    def from_positions(cls, network_id, positions: Sequence[AssetPosition], tbd=0.0):
        positions = tuple(positions)
        return cls(network_id, sum(p.notional for p in positions), tbd, positions)

    @property
    def total_with_tbd(self) -> float:
        return self.current_total + self.tbd


@dataclass(frozen=True)
class BridgeLink:
    """Directed capacities: ``cap_pq`` moves funds P->Q, ``cap_qp`` Q->P."""

    cap_pq: float
    cap_qp: float

    def __post_init__(self):
        if self.cap_pq < 0 or self.cap_qp < 0:
            raise NegativeAmount(
                f"bridge capacities must be >= 0, got ({self.cap_pq}, {self.cap_qp})"
            )

    def reversed(self) -> "BridgeLink":
        return BridgeLink(self.cap_qp, self.cap_pq)


@dataclass(frozen=True)
class AssetWeightBand:
    """Raw (min, ideal, max) global weights and the values derived from them.

    ``stretched_*`` are filled by :func:`bridgeflow.stretch.stretch_band` and
    ``network_*`` by :func:`bridgeflow.allocation.network_band`.
    """

    raw_min: float
    raw_ideal: float
    raw_max: float
    stretched_min: Optional[float] = None
    stretched_max: Optional[float] = None
    network_min: Optional[float] = None
    network_ideal: Optional[float] = None
    network_max: Optional[float] = None

    def __post_init__(self):
        if not (0 <= self.raw_min <= self.raw_ideal <= self.raw_max):
            raise BridgeflowError(
                "raw weights must satisfy 0 <= min <= ideal <= max, got "
                f"({self.raw_min}, {self.raw_ideal}, {self.raw_max})"
            )

    @classmethod
    def from_range(cls, raw_min: float, raw_max: float) -> "AssetWeightBand":
        """Band whose ideal weight sits midway between min and max."""
        return cls(raw_min, 0.5 * (raw_min + raw_max), raw_max)


@dataclass(frozen=True)
class AssetListing:
    """A global asset, its raw weight band and the networks that carry it."""

    asset_id: Hashable
    band: AssetWeightBand
    available_on: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "available_on", frozenset(self.available_on))
        if not self.available_on:
            raise BridgeflowError(f"asset {self.asset_id!r} is not available anywhere")


@dataclass(frozen=True)
class StretchResult:
    collect_deploy_diff: float
    raw_stretch: float
    capped_stretch: float
    cap: float


@dataclass(frozen=True)
class BandAssessment:
    total_with_tbd: float
    min_capacity: float
    max_capacity: float
    outside_band: float
    max_send: float
    max_receive: float


@dataclass(frozen=True)
class TransferDecision:
    """Signed transfer amounts; positive ``*_pq`` means P sends to Q."""

    simple_pq: float
    simple_qp: float
    delta_pq: float
    delta_qp: float

    @classmethod
    def zero(cls) -> "TransferDecision":
        return cls(0.0, 0.0, 0.0, 0.0)

    def swapped(self) -> "TransferDecision":
        return TransferDecision(self.simple_qp, self.simple_pq, self.delta_qp, self.delta_pq)

    def is_zero(self) -> bool:
        return not any((self.simple_pq, self.simple_qp, self.delta_pq, self.delta_qp))


def validate_scenario(p: NetworkState, q: NetworkState, bridge: BridgeLink):
    """Check the withdrawal constraint for a pair of networks.

    Total net withdrawal across both networks may not exceed what is
    currently invested on them. Returns the inputs unchanged on success.
    """
    for state in (p, q):
        if state.current_total < 0:
            raise NegativeAmount(f"network {state.network_id!r} has negative current_total")
    if bridge.cap_pq < 0 or bridge.cap_qp < 0:
        raise NegativeAmount("bridge capacities must be >= 0")
    withdrawal = -(p.tbd + q.tbd)
    invested = p.current_total + q.current_total
    if withdrawal > invested:
        raise WithdrawalExceedsInvestment(
            f"net withdrawal {withdrawal} exceeds current investment {invested}"
        )
    return p, q, bridge


def validate_networks(states: Sequence[NetworkState]) -> None:
    """N-network form of :func:`validate_scenario`."""
    for state in states:
        if state.current_total < 0:
            raise NegativeAmount(f"network {state.network_id!r} has negative current_total")
    withdrawal = -sum(s.tbd for s in states)
    invested = sum(s.current_total for s in states)
    if withdrawal > invested:
        raise WithdrawalExceedsInvestment(
            f"net withdrawal {withdrawal} exceeds current investment {invested}"
        )
