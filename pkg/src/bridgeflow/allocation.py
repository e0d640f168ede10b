"""Per-network split of stretched global weights and the resulting capacity bands."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from bridgeflow.stretch import stretch_band
from bridgeflow.types import AssetListing, AssetWeightBand, BridgeflowError, UndefinedShare


@dataclass(frozen=True)
class TrimConfig:
    min_weight: float = 0.0
    max_weight: float = 1.0

    def __post_init__(self):
        if self.min_weight > self.max_weight:
            raise BridgeflowError(
                f"min_weight {self.min_weight} exceeds max_weight {self.max_weight}"
            )


@dataclass(frozen=True)
class CapacityBand:
    min_capacity: float
    max_capacity: float


def network_weight(
    available_p: bool, available_q: bool, total_with_tbd_p: float, total_with_tbd_q: float
) -> float:
    """Share of an asset held on P, proportional to P's post-flow total."""
    if not (available_p or available_q):
        raise UndefinedShare("asset is available on neither network")
    numer = total_with_tbd_p if available_p else 0.0
    denom = numer + (total_with_tbd_q if available_q else 0.0)
    if denom == 0:
        raise UndefinedShare("contributing totals sum to zero")
    return numer / denom


def trim_network_weight(w: float, cfg: TrimConfig = TrimConfig()) -> tuple[float, float]:
    trimmed = min(max(w, cfg.min_weight), cfg.max_weight)
    return trimmed, 1.0 - trimmed


def network_band(band: AssetWeightBand, share: float) -> AssetWeightBand:
    if band.stretched_min is None or band.stretched_max is None:
        raise BridgeflowError("band must be stretched before it is split across networks")
    return AssetWeightBand(
        band.raw_min,
        band.raw_ideal,
        band.raw_max,
        band.stretched_min,
        band.stretched_max,
        network_min=band.stretched_min * share,
        network_ideal=band.raw_ideal * share,
        network_max=band.stretched_max * share,
    )


def network_capacity(
    total_pq_with_tbd: float, network_bands: Iterable[AssetWeightBand]
) -> CapacityBand:
    lo = hi = 0.0
    for band in network_bands:
        lo += band.network_min
        hi += band.network_max
    return CapacityBand(total_pq_with_tbd * lo, total_pq_with_tbd * hi)


def asset_shares(
    listing: AssetListing,
    network_ids: Sequence[Hashable],
    totals: Mapping[Hashable, float],
    cfg: TrimConfig,
) -> dict:
    """Fraction of one asset's weight assigned to each network carrying it.

    Single-network assets keep their full weight. Assets on exactly two
    networks get the pairwise trimmed split, the first network (in
    ``network_ids`` order) being clamped and the second taking the
    complement. With three or more carriers every share is clamped and
    the result renormalised.
    """
    carriers = [n for n in network_ids if n in listing.available_on]
    if not carriers:
        return {}
    if len(carriers) == 1:
        return {carriers[0]: 1.0}
    if len(carriers) == 2:
        x, y = carriers
        try:
            w = network_weight(True, True, totals[x], totals[y])
        except UndefinedShare:
            # both carriers hold nothing; any split yields zero capacity
            w = 0.5
        wx, wy = trim_network_weight(w, cfg)
        return {x: wx, y: wy}
    denom = sum(totals[n] for n in carriers)
    if denom == 0:
        raw = {n: 1.0 / len(carriers) for n in carriers}
    else:
        raw = {n: totals[n] / denom for n in carriers}
    clipped = {n: min(max(v, cfg.min_weight), cfg.max_weight) for n, v in raw.items()}
    s = sum(clipped.values())
    if s > 0:
        clipped = {n: v / s for n, v in clipped.items()}
    return clipped


def capacity_totals(
    network_ids: Sequence[Hashable],
    totals: Mapping[Hashable, float],
    listings: Sequence[AssetListing],
    stretch: float,
    cfg: TrimConfig = TrimConfig(),
) -> dict:
    """Capacity band per network, computed without materialising per-asset bands.

    Gives the same floats as :func:`capacity_bands` (same operation order).
    """
    if stretch < 0:
        raise BridgeflowError("stretch must be >= 0")
    lo = dict.fromkeys(network_ids, 0.0)
    hi = dict.fromkeys(network_ids, 0.0)
    for listing in listings:
        s_lo = listing.band.raw_min * (1.0 - stretch)
        s_hi = listing.band.raw_max * (1.0 + stretch)
        for n, share in asset_shares(listing, network_ids, totals, cfg).items():
            lo[n] += s_lo * share
            hi[n] += s_hi * share
    grand_total = sum(totals[n] for n in network_ids)
    return {n: CapacityBand(grand_total * lo[n], grand_total * hi[n]) for n in network_ids}


def capacity_bands(
    network_ids: Sequence[Hashable],
    totals: Mapping[Hashable, float],
    listings: Sequence[AssetListing],
    stretch: float,
    cfg: TrimConfig = TrimConfig(),
) -> tuple[dict, dict]:
    """Capacity band per network plus the per-network asset bands behind it.

    ``totals`` maps each network to its current-plus-pending amount. The
    band edges scale the combined total across all listed networks.
    """
    grand_total = sum(totals[n] for n in network_ids)
    per_network: dict = {n: [] for n in network_ids}
    for listing in listings:
        stretched = stretch_band(listing.band, stretch)
        for n, share in asset_shares(listing, network_ids, totals, cfg).items():
            per_network[n].append(network_band(stretched, share))
    bands = {n: network_capacity(grand_total, per_network[n]) for n in network_ids}
    return bands, per_network
