"""Cross-network fund flow allocation under bridge capacity limits."""

from bridgeflow.types import (
    AssetListing,
    AssetPosition,
    AssetWeightBand,
    BandAssessment,
    BridgeLink,
    BridgeflowError,
    DegenerateDenominator,
    InsufficientHistory,
    NegativeAmount,
    NetworkState,
    OutOfRange,
    StretchResult,
    TransferDecision,
    UndefinedRatio,
    UndefinedShare,
    WithdrawalExceedsInvestment,
    validate_scenario,
)
from bridgeflow.stretch import (
    DEFAULT_MAX_STRETCH,
    NetworkFlowEstimate,
    bridge_stretch,
    cap_stretch,
    collect_deploy_diff,
    stretch_band,
)
from bridgeflow.allocation import (
    CapacityBand,
    TrimConfig,
    network_band,
    network_capacity,
    network_weight,
    trim_network_weight,
)
from bridgeflow.transfer import (
    DEFAULT_DELTA,
    PipelineResult,
    assess_band,
    pipeline,
    positivity_indicator,
    transfer_delta,
    transfer_simple,
)
from bridgeflow.routing import NetworkNeed, RoutingResult, round_robin_route, sort_by_need
from bridgeflow.estimator import BridgeTransferEstimator

__version__ = "0.1.0"

__all__ = [
    "AssetListing",
    "AssetPosition",
    "AssetWeightBand",
    "BandAssessment",
    "BridgeLink",
    "BridgeTransferEstimator",
    "BridgeflowError",
    "CapacityBand",
    "DEFAULT_DELTA",
    "DEFAULT_MAX_STRETCH",
    "DegenerateDenominator",
    "InsufficientHistory",
    "NegativeAmount",
    "NetworkFlowEstimate",
    "NetworkNeed",
    "NetworkState",
    "OutOfRange",
    "PipelineResult",
    "RoutingResult",
    "StretchResult",
    "TransferDecision",
    "TrimConfig",
    "UndefinedRatio",
    "UndefinedShare",
    "WithdrawalExceedsInvestment",
    "assess_band",
    "bridge_stretch",
    "cap_stretch",
    "collect_deploy_diff",
    "network_band",
    "network_capacity",
    "network_weight",
    "pipeline",
    "positivity_indicator",
    "round_robin_route",
    "sort_by_need",
    "stretch_band",
    "transfer_delta",
    "transfer_simple",
    "trim_network_weight",
    "validate_scenario",
]
