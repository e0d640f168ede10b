"""Flow estimates: realised flows, historical averages and positive-valued samplers."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from bridgeflow.stretch import NetworkFlowEstimate
from bridgeflow.types import BridgeflowError, InsufficientHistory, OutOfRange


@dataclass(frozen=True)
class FlowSeries:
    """Pending-flow increments; ``values[k]`` accrues over ``(timestamps[k-1], timestamps[k]]``."""

    timestamps: tuple
    values: tuple
    rebalance_marks: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if ts.shape != vs.shape or ts.ndim != 1:
            raise BridgeflowError("timestamps and values must be 1-d and equally long")
        if ts.size and np.any(np.diff(ts) <= 0):
            raise BridgeflowError("timestamps must be strictly increasing")
        if not np.all(np.isfinite(vs)):
            raise BridgeflowError("flow values must be finite")
        object.__setattr__(self, "timestamps", tuple(ts.tolist()))
        object.__setattr__(self, "values", tuple(vs.tolist()))
        object.__setattr__(self, "rebalance_marks", frozenset(self.rebalance_marks))

    def window_sum(self, start: float, end: float) -> float:
        return float(sum(v for t, v in zip(self.timestamps, self.values) if start < t <= end))


def actuals_since_rebalance(series: FlowSeries, last_rebalance: float, now: float) -> float:
    """Realised net flow over ``(last_rebalance, now]``."""
    if last_rebalance >= now:
        raise BridgeflowError("last_rebalance must precede now")
    if not series.timestamps:
        raise OutOfRange("series is empty")
    if now < series.timestamps[0] or last_rebalance >= series.timestamps[-1]:
        raise OutOfRange(
            f"window ({last_rebalance}, {now}] lies outside "
            f"[{series.timestamps[0]}, {series.timestamps[-1]}]"
        )
    return series.window_sum(last_rebalance, now)


def historical_average_forecast(
    series: FlowSeries, horizon: float, now: Optional[float] = None
) -> float:
    """Equal-weight mean of flow over past horizon-length windows.

    Windows are non-overlapping, end at ``now`` (default: last timestamp)
    and reach back to the first timestamp. A window holding a rebalance
    mark is dropped whole.
    """
    if horizon <= 0:
        raise BridgeflowError("horizon must be positive")
    if not series.timestamps:
        raise InsufficientHistory("series is empty")
    if now is None:
        now = series.timestamps[-1]
    start = series.timestamps[0]
    changes = []
    k = 1
    while now - k * horizon >= start - 1e-12 * max(1.0, abs(start)):
        lo, hi = now - k * horizon, now - (k - 1) * horizon
        if not any(lo < m <= hi for m in series.rebalance_marks):
            changes.append(series.window_sum(lo, hi))
        k += 1
    if not changes:
        raise InsufficientHistory("no complete window free of rebalancing jumps")
    return float(np.mean(changes))


@dataclass(frozen=True)
class GbmParams:
    initial: float
    drift: float
    volatility: float
    horizon: float
    steps: int = 1

    def __post_init__(self):
        if self.initial <= 0:
            raise BridgeflowError("initial value must be positive")
        if self.volatility < 0:
            raise BridgeflowError("volatility must be nonnegative")
        if self.horizon <= 0:
            raise BridgeflowError("horizon must be positive")
        if self.steps < 1:
            raise BridgeflowError("steps must be >= 1")


def gbm_sample_paths(params: GbmParams, n_paths: int, seed: int) -> np.ndarray:
    """Paths of shape ``(n_paths, steps + 1)`` stepped exactly in log space."""
    rng = np.random.default_rng(seed)
    dt = params.horizon / params.steps
    mu = (params.drift - 0.5 * params.volatility**2) * dt
    sd = params.volatility * np.sqrt(dt)
    increments = mu + sd * rng.standard_normal((n_paths, params.steps))
    log_paths = np.concatenate(
        [np.zeros((n_paths, 1)), np.cumsum(increments, axis=1)], axis=1
    )
    return params.initial * np.exp(log_paths)


def gbm_sample_path(params: GbmParams, seed: int) -> np.ndarray:
    return gbm_sample_paths(params, 1, seed)[0]


def folded_normal_sample(
    mu: float, sigma: float, seed: int, size: Optional[int] = None
):
    """Draw(s) of ``|N(mu, sigma**2)|``; a scalar when ``size`` is None."""
    if sigma < 0:
        raise BridgeflowError("sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    draw = np.abs(rng.normal(mu, sigma, size=size))
    return float(draw) if size is None else draw


def estimate_from_series(
    tbd_series: FlowSeries,
    current_total: float,
    horizon: Optional[float] = None,
    last_rebalance: Optional[float] = None,
):
    """Build a flow estimate from realised flows or, with ``horizon``, a forecast."""
    if horizon is not None:
        tbd = historical_average_forecast(tbd_series, horizon)
    else:
        if last_rebalance is None:
            raise BridgeflowError("give either horizon or last_rebalance")
        tbd = actuals_since_rebalance(tbd_series, last_rebalance, tbd_series.timestamps[-1])
    return NetworkFlowEstimate(tbd, current_total)


__all__ = [
    "FlowSeries",
    "GbmParams",
    "actuals_since_rebalance",
    "estimate_from_series",
    "folded_normal_sample",
    "gbm_sample_path",
    "gbm_sample_paths",
    "historical_average_forecast",
]
