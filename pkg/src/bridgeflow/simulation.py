"""Scenario generation and tabulation for batch studies of the transfer algorithm.

A batch holds a fixed set of hand-built scenarios followed by randomly
sampled ones. Each random scenario is reproducible from ``(rng_seed, index)``
alone, so any row can be regenerated in isolation.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import functools
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from bridgeflow.allocation import TrimConfig
from bridgeflow.stretch import DEFAULT_MAX_STRETCH
from bridgeflow.transfer import DEFAULT_DELTA, PipelineResult, pipeline
from bridgeflow.types import (
    AssetListing,
    AssetWeightBand,
    BridgeflowError,
    BridgeLink,
    NetworkState,
    validate_scenario,
)

P, Q = "P", "Q"

INPUT_COLUMNS = [
    "minGlobalWeight",
    "maxGlobalWeight",
    "BridgeCapacity_PQ",
    "BridgeCapacity_QP",
    "TBDAmount_P",
    "CurrentAmount_P",
    "TBDAmount_Q",
    "CurrentAmount_Q",
]
PRIMARY_COLUMNS = [
    "TransferAmount_PQ_Delta",
    "TransferAmount_QP_Delta",
    "TransferAmount_PQ",
    "TransferAmount_QP",
    "BridgeStretch",
    "collectDeployDiff",
    "outsideBand_P",
    "outsideBand_Q",
    "maxSend_P",
    "maxSend_Q",
    "maxRecieve_P",
    "maxRecieve_Q",
]
INTERMEDIATE_COLUMNS = [
    "TBD+Current_P",
    "TBD+Current_Q",
    "outsideBand_PQ_D",
    "outsideBand_QP_D",
    "outsideBand_Positive_P",
    "outsideBand_Positive_Q",
    "transfer_PQ_First_D",
    "transfer_PQ_First",
    "transfer_PQ_Second",
    "transfer_QP_First_D",
    "transfer_QP_First",
    "transfer_QP_Second",
    "Total-MinCapacity_P",
    "Total-MaxCapacity_P",
    "Total-MinCapacity_Q",
    "Total-MaxCapacity_Q",
]
# dimensionless columns, never rounded to whole dollars
RATIO_COLUMNS = {
    "minGlobalWeight",
    "maxGlobalWeight",
    "BridgeStretch",
    "collectDeployDiff",
    "outsideBand_Positive_P",
    "outsideBand_Positive_Q",
}
ROW_KEY = "Scenario"
STATUS_KEY = "Status"

TABLE_FILES = {
    "inputs": "inputs.csv",
    "primary": "primary.csv",
    "intermediate": "intermediate.csv",
}

MAX_RESAMPLES = 100


class ConfigError(BridgeflowError):
    pass


@dataclass(frozen=True)
class SimulationParams:
    """Bounds of the uniform draws plus the algorithm constants used in a batch.

    ``n_scenarios`` counts random rows only; the hand-built rows are
    always emitted first.
    """

    min_weight_seed: float = 0.01
    max_weight_seed: float = 0.40
    delta: float = DEFAULT_DELTA
    max_bridge_stretch: float = DEFAULT_MAX_STRETCH
    min_network_weight_trim: float = 0.0
    max_network_weight_trim: float = 1.0
    min_bridge_capacity: float = 0.0
    max_bridge_capacity: float = 100_000.0
    min_current_amount: float = 10_000.0
    max_current_amount: float = 100_000.0
    n_assets_p: int = 5
    n_assets_q: int = 5
    availability_prob: float = 1.0
    n_scenarios: int = 20
    rng_seed: int = 2023

    def __post_init__(self):
        pairs = [
            ("min_weight_seed", "max_weight_seed"),
            ("min_network_weight_trim", "max_network_weight_trim"),
            ("min_bridge_capacity", "max_bridge_capacity"),
            ("min_current_amount", "max_current_amount"),
        ]
        for lo, hi in pairs:
            if getattr(self, lo) > getattr(self, hi):
                raise ConfigError(f"{lo} must not exceed {hi}")
        if not 0 <= self.min_weight_seed:
            raise ConfigError("weight seeds must be nonnegative")
        if self.min_bridge_capacity < 0 or self.min_current_amount < 0:
            raise ConfigError("capacities and current amounts must be nonnegative")
        if self.delta <= 0:
            raise ConfigError("delta must be positive")
        if self.max_bridge_stretch < 0:
            raise ConfigError("max_bridge_stretch must be nonnegative")
        if self.n_assets_p < 1 or self.n_assets_q < 1:
            raise ConfigError("each network needs at least one asset")
        if self.n_scenarios < 0:
            raise ConfigError("n_scenarios must be >= 0")
        if self.rng_seed < 0:
            raise ConfigError("rng_seed must be >= 0")
        if not 0 < self.availability_prob <= 1:
            raise ConfigError("availability_prob must lie in (0, 1]")

    @property
    def trim(self) -> TrimConfig:
        return TrimConfig(self.min_network_weight_trim, self.max_network_weight_trim)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def params_from_mapping(data: dict, **overrides) -> SimulationParams:
    fields = {f.name: f for f in dataclasses.fields(SimulationParams)}
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    merged = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    kwargs = {}
    for name, value in merged.items():
        kind = int if fields[name].type in ("int", int) else float
        try:
            kwargs[name] = kind(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: cannot read {value!r} as {kind.__name__}") from exc
    return SimulationParams(**kwargs)


def load_params(path, **overrides) -> SimulationParams:
    """Read a YAML (or JSON) mapping of :class:`SimulationParams` fields."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a mapping")
    return params_from_mapping(data, **overrides)


@dataclass(frozen=True)
class RebalanceScenario:
    name: str
    p: NetworkState
    q: NetworkState
    bridge: BridgeLink
    assets: tuple
    provenance: str = "manual"

    def __post_init__(self):
        object.__setattr__(self, "assets", tuple(self.assets))
        validate_scenario(self.p, self.q, self.bridge)

    def evaluate(self, params: SimulationParams = SimulationParams()) -> PipelineResult:
        return pipeline(
            self.p,
            self.q,
            self.bridge,
            self.assets,
            cfg=params.trim,
            max_stretch=params.max_bridge_stretch,
            delta=params.delta,
        )


def _uniform(lo: float, hi: float, u: float) -> float:
    return lo + (hi - lo) * u


def _draw(rng: np.random.Generator, params: SimulationParams) -> tuple:
    """One raw draw: asset listings, capacities, current amounts and pending flows."""
    n = max(params.n_assets_p, params.n_assets_q)
    u = rng.random(_draws_per_attempt(params)).tolist()
    lo_seed, hi_seed = params.min_weight_seed, params.max_weight_seed
    prob = params.availability_prob
    on_p = [k < params.n_assets_p and u[2 * n + k] < prob for k in range(n)]
    on_q = [k < params.n_assets_q and u[3 * n + k] < prob for k in range(n)]
    if not any(on_p):
        on_p[int(u[4 * n + 6] * params.n_assets_p)] = True
    if not any(on_q):
        on_q[int(u[4 * n + 7] * params.n_assets_q)] = True
    listings = []
    for k in range(n):
        where = {net for net, flag in ((P, on_p[k]), (Q, on_q[k])) if flag}
        if where:
            w_min = _uniform(lo_seed, hi_seed, u[k])
            w_max = _uniform(w_min, hi_seed, u[n + k])
            listings.append(AssetListing(f"A{k}", AssetWeightBand.from_range(w_min, w_max), where))
    v = u[4 * n:]
    cap_pq = _uniform(params.min_bridge_capacity, params.max_bridge_capacity, v[0])
    cap_qp = _uniform(params.min_bridge_capacity, params.max_bridge_capacity, v[1])
    curr_p = _uniform(params.min_current_amount, params.max_current_amount, v[2])
    curr_q = _uniform(params.min_current_amount, params.max_current_amount, v[3])
    invested = curr_p + curr_q
    tbd_p = _uniform(-invested, params.max_current_amount, v[4])
    tbd_q = _uniform(-invested + max(-tbd_p, 0.0), params.max_current_amount, v[5])
    return tuple(listings), cap_pq, cap_qp, curr_p, curr_q, tbd_p, tbd_q


def _draws_per_attempt(params: SimulationParams) -> int:
    return 4 * max(params.n_assets_p, params.n_assets_q) + 8


@functools.lru_cache(maxsize=64)
def _base_state(seed: int) -> dict:
    return np.random.PCG64(seed).state


_scratch = threading.local()


def _index_rng(params: SimulationParams, index: int) -> np.random.Generator:
    """Generator positioned at the start of block ``index`` of the seed's stream.

    Each block holds enough draws for every resampling attempt, so blocks
    never overlap and a row depends only on ``(rng_seed, index)``.
    """
    bit_gen = getattr(_scratch, "bit_gen", None)
    if bit_gen is None:
        bit_gen = _scratch.bit_gen = np.random.PCG64(0)
    bit_gen.state = _base_state(params.rng_seed)
    bit_gen.advance(index * MAX_RESAMPLES * _draws_per_attempt(params))
    return np.random.Generator(bit_gen)


def _inside_delta_gap(result: PipelineResult, delta: float) -> bool:
    return any(
        0 < abs(a.outside_band) < delta for a in (result.assessment_p, result.assessment_q)
    )


def sample_scenario(params: SimulationParams, index: int) -> RebalanceScenario:
    """Draw scenario ``index`` of the random stream seeded by ``params.rng_seed``.

    Redraws (deterministically) when a draw breaks the withdrawal constraint
    through rounding, has an undefined need ratio, or lands a band breach
    strictly between 0 and ``delta``.
    """
    return sample_evaluated(params, index)[0]


def sample_evaluated(params: SimulationParams, index: int) -> tuple:
    """:func:`sample_scenario` together with its pipeline result."""
    rng = _index_rng(params, index)
    last_error: Optional[Exception] = None
    for _ in range(MAX_RESAMPLES):
        assets, cap_pq, cap_qp, curr_p, curr_q, tbd_p, tbd_q = _draw(rng, params)
        try:
            scenario = RebalanceScenario(
                name=f"random-{index}",
                p=NetworkState(P, curr_p, tbd_p),
                q=NetworkState(Q, curr_q, tbd_q),
                bridge=BridgeLink(cap_pq, cap_qp),
                assets=assets,
                provenance=f"random({params.rng_seed},{index})",
            )
            result = scenario.evaluate(params)
        except BridgeflowError as exc:
            last_error = exc
            continue
        if not _inside_delta_gap(result, params.delta):
            return scenario, result
    raise BridgeflowError(
        f"no admissible draw for index {index} after {MAX_RESAMPLES} attempts: {last_error}"
    )


def _listing(asset_id, lo, hi, *networks) -> AssetListing:
    return AssetListing(asset_id, AssetWeightBand.from_range(lo, hi), frozenset(networks))


# All four assets trade on both networks: shares follow each network's
# post-flow total, so both networks sit inside their bands.
SHARED_ASSETS = (
    _listing("S1", 0.10, 0.20, P, Q),
    _listing("S2", 0.15, 0.25, P, Q),
    _listing("S3", 0.20, 0.30, P, Q),
    _listing("S4", 0.25, 0.35, P, Q),
)

# Most weight sits in single-network assets, so a network's band does not
# track its own total and pending flows push it outside.
SPLIT_ASSETS = (
    _listing("P1", 0.25, 0.30, P),
    _listing("Q1", 0.25, 0.30, Q),
    _listing("S1", 0.15, 0.20, P, Q),
    _listing("S2", 0.20, 0.25, P, Q),
)

# (name, curr_p, tbd_p, curr_q, tbd_q, cap_pq, cap_qp, assets)
_MANUAL = (
    ("all-zero-flows", 50_000, 0, 50_000, 0, 20_000, 20_000, SHARED_ASSETS),
    ("deposit-only-p", 50_000, 85_000, 50_000, 0, 30_000, 30_000, SPLIT_ASSETS),
    ("deposit-only-q", 50_000, 0, 50_000, 85_000, 30_000, 30_000, SPLIT_ASSETS),
    ("withdrawal-within-band", 50_000, -5_000, 50_000, 0, 20_000, 20_000, SHARED_ASSETS),
    ("withdrawal-exceeds-surplus", 10_000, -5_000, 10_000, 10_000, 50_000, 50_000, SPLIT_ASSETS),
    ("zero-capacity", 50_000, -40_000, 50_000, 30_000, 0, 0, SPLIT_ASSETS),
    ("asymmetric-capacities", 50_000, -40_000, 50_000, 30_000, 80_000, 5_000, SPLIT_ASSETS),
    ("capacity-exactly-binding", 50_000, -40_000, 50_000, 0, 40_000, 4_800, SPLIT_ASSETS),
    ("withdrawal-at-boundary", 40_000, -30_000, 60_000, -70_000, 20_000, 20_000, SPLIT_ASSETS),
    (
        "single-network-concentration",
        10_000, 0, 50_000, 0, 25_000, 25_000,
        (_listing("P1", 0.60, 0.80, P), _listing("Q1", 0.10, 0.20, Q), _listing("S1", 0.05, 0.10, P, Q)),
    ),
    ("trim-clamp-activation", 60_000, 10_000, 30_000, -45_000, 40_000, 40_000, SPLIT_ASSETS),
    ("stretch-cap-activation", 20_000, 30_000, 80_000, -10_000, 50_000, 50_000, SPLIT_ASSETS),
    ("both-inside-band-noop", 70_000, 10_000, 30_000, 5_000, 20_000, 20_000, SHARED_ASSETS),
    ("simple-vs-delta-divergence", 50_000, -15_000, 50_000, 45_000, 60_000, 60_000, SPLIT_ASSETS),
    ("equal-ratio-zero-diff", 10_000, 5_000, 100_000, 50_000, 30_000, 30_000, SPLIT_ASSETS),
)


def manual_scenarios() -> list[RebalanceScenario]:
    """The fixed hand-built scenarios, one per special case, in report order."""
    return [
        RebalanceScenario(
            name=name,
            p=NetworkState(P, float(cp), float(tp)),
            q=NetworkState(Q, float(cq), float(tq)),
            bridge=BridgeLink(float(c_pq), float(c_qp)),
            assets=assets,
        )
        for name, cp, tp, cq, tq, c_pq, c_qp, assets in _MANUAL
    ]


def scenario_rows(scenario: RebalanceScenario, result: PipelineResult) -> tuple[dict, dict, dict]:
    """Input echo, primary outputs and intermediate values for one scenario."""
    inputs = {
        "minGlobalWeight": sum(a.band.raw_min for a in scenario.assets),
        "maxGlobalWeight": sum(a.band.raw_max for a in scenario.assets),
        "BridgeCapacity_PQ": scenario.bridge.cap_pq,
        "BridgeCapacity_QP": scenario.bridge.cap_qp,
        "TBDAmount_P": scenario.p.tbd,
        "CurrentAmount_P": scenario.p.current_total,
        "TBDAmount_Q": scenario.q.tbd,
        "CurrentAmount_Q": scenario.q.current_total,
    }
    if result is None:
        nan = float("nan")
        return (
            inputs,
            dict.fromkeys(PRIMARY_COLUMNS, nan),
            dict.fromkeys(INTERMEDIATE_COLUMNS, nan),
        )
    a_p, a_q, d = result.assessment_p, result.assessment_q, result.decision
    primary = {
        "TransferAmount_PQ_Delta": d.delta_pq,
        "TransferAmount_QP_Delta": d.delta_qp,
        "TransferAmount_PQ": d.simple_pq,
        "TransferAmount_QP": d.simple_qp,
        "BridgeStretch": result.stretch.raw_stretch,
        "collectDeployDiff": result.stretch.collect_deploy_diff,
        "outsideBand_P": a_p.outside_band,
        "outsideBand_Q": a_q.outside_band,
        "maxSend_P": a_p.max_send,
        "maxSend_Q": a_q.max_send,
        "maxRecieve_P": a_p.max_receive,
        "maxRecieve_Q": a_q.max_receive,
    }
    intermediate = {
        "TBD+Current_P": a_p.total_with_tbd,
        "TBD+Current_Q": a_q.total_with_tbd,
        **result.terms(),
        "Total-MinCapacity_P": a_p.total_with_tbd - a_p.min_capacity,
        "Total-MaxCapacity_P": a_p.total_with_tbd - a_p.max_capacity,
        "Total-MinCapacity_Q": a_q.total_with_tbd - a_q.min_capacity,
        "Total-MaxCapacity_Q": a_q.total_with_tbd - a_q.max_capacity,
    }
    return inputs, primary, {k: intermediate[k] for k in INTERMEDIATE_COLUMNS}


@dataclass
class BatchResult:
    params: SimulationParams
    scenarios: list = field(default_factory=list)
    results: list = field(default_factory=list)
    statuses: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    primary: list = field(default_factory=list)
    intermediate: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.scenarios)

    def ok_results(self) -> list:
        return [r for r in self.results if r is not None]


def run_batch(params: SimulationParams = SimulationParams()) -> BatchResult:
    """Evaluate the hand-built scenarios, then ``params.n_scenarios`` random ones.

    A row whose evaluation fails is kept with NaN outputs and its error in
    the status column; the batch carries on.
    """
    batch = BatchResult(params)
    manual = manual_scenarios()
    nan = float("nan")
    for i in range(len(manual) + params.n_scenarios):
        try:
            if i < len(manual):
                scenario = manual[i]
                result = scenario.evaluate(params)
            else:
                scenario, result = sample_evaluated(params, i - len(manual))
            status = "ok"
        except BridgeflowError as exc:
            scenario = manual[i] if i < len(manual) else None
            result, status = None, f"error: {type(exc).__name__}: {exc}"
        if scenario is None:
            inputs = dict.fromkeys(INPUT_COLUMNS, nan)
            primary = dict.fromkeys(PRIMARY_COLUMNS, nan)
            intermediate = dict.fromkeys(INTERMEDIATE_COLUMNS, nan)
        else:
            inputs, primary, intermediate = scenario_rows(scenario, result)
        batch.scenarios.append(scenario)
        batch.results.append(result)
        batch.statuses.append(status)
        batch.inputs.append(inputs)
        batch.primary.append(primary)
        batch.intermediate.append(intermediate)
    return batch


def format_value(value: float, column: str, round_usd: bool = False) -> str:
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if round_usd and column not in RATIO_COLUMNS:
        # avoid printing "-0"
        return f"{round(value) + 0:d}" if math.isfinite(value) else repr(value)
    return repr(float(value))


def _write_table(path: Path, columns: list, rows: list, labels: list, extra=None) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        head = [ROW_KEY, *columns] + ([STATUS_KEY] if extra is not None else [])
        writer.writerow(head)
        for i, row in enumerate(rows):
            line = [labels[i], *(row[c] for c in columns)]
            if extra is not None:
                line.append(extra[i])
            writer.writerow(line)


def write_tables(batch: BatchResult, out_dir, round_usd: bool = False) -> dict:
    """Write the three CSV tables and return their paths keyed by table name."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    labels = [str(i + 1) for i in range(len(batch))]

    def fmt(rows, columns):
        return [{c: format_value(r[c], c, round_usd) for c in columns} for r in rows]

    paths = {name: out_dir / fname for name, fname in TABLE_FILES.items()}
    _write_table(
        paths["inputs"], INPUT_COLUMNS, fmt(batch.inputs, INPUT_COLUMNS), labels, batch.statuses
    )
    _write_table(paths["primary"], PRIMARY_COLUMNS, fmt(batch.primary, PRIMARY_COLUMNS), labels)
    _write_table(
        paths["intermediate"],
        INTERMEDIATE_COLUMNS,
        fmt(batch.intermediate, INTERMEDIATE_COLUMNS),
        labels,
    )
    return paths


def params_echo(params: SimulationParams) -> str:
    return json.dumps(params.to_dict(), indent=2, sort_keys=True)
