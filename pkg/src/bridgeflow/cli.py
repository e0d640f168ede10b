"""Command-line entry point: ``simulate``, ``transfer`` and ``route``.

Settings resolve as command-line flags > config file > built-in defaults.
Exit status is 0 on success, 1 when an error is reported and 2 for usage
errors (from argparse).
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import yaml

from bridgeflow.allocation import TrimConfig
from bridgeflow.routing import round_robin_route
from bridgeflow.simulation import (
    INTERMEDIATE_COLUMNS,
    P,
    PRIMARY_COLUMNS,
    Q,
    RATIO_COLUMNS,
    SHARED_ASSETS,
    ConfigError,
    load_params,
    params_echo,
    params_from_mapping,
    run_batch,
    write_tables,
)
from bridgeflow.stretch import DEFAULT_MAX_STRETCH
from bridgeflow.transfer import DEFAULT_DELTA, pipeline
from bridgeflow.types import (
    AssetListing,
    AssetWeightBand,
    BridgeflowError,
    BridgeLink,
    NetworkState,
)

SCENARIO_FLAGS = ("tbd_p", "curr_p", "tbd_q", "curr_q", "cap_pq", "cap_qp")
ALGO_KEYS = ("max_stretch", "delta", "min_weight", "max_weight")
ALGO_DEFAULTS = {
    "max_stretch": DEFAULT_MAX_STRETCH,
    "delta": DEFAULT_DELTA,
    "min_weight": 0.0,
    "max_weight": 1.0,
}
TRANSFER_EXTRA = ("net_pq", "net_delta_pq", "residual_p", "residual_q", "flags")


# ---------------------------------------------------------------- helpers


def _read_yaml(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _read_mapping(path) -> dict:
    data = _read_yaml(path) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping")
    return data


def _float(value, what: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: cannot read {value!r} as a number") from exc


def parse_assets(entries, default_networks=(P, Q)) -> tuple:
    """Asset listings from a list of ``{id, min, max[, ideal][, networks]}`` mappings."""
    if not isinstance(entries, list) or not entries:
        raise ConfigError("assets must be a non-empty list")
    out = []
    for k, e in enumerate(entries):
        if not isinstance(e, dict):
            raise ConfigError(f"asset #{k + 1} must be a mapping")
        missing = {"min", "max"} - set(e)
        if missing:
            raise ConfigError(f"asset #{k + 1} lacks {', '.join(sorted(missing))}")
        lo = _float(e["min"], f"asset #{k + 1} min")
        hi = _float(e["max"], f"asset #{k + 1} max")
        ideal = _float(e["ideal"], f"asset #{k + 1} ideal") if "ideal" in e else 0.5 * (lo + hi)
        networks = e.get("networks", list(default_networks))
        if isinstance(networks, str):
            networks = [networks]
        out.append(
            AssetListing(
                str(e.get("id", f"A{k}")),
                AssetWeightBand(lo, ideal, hi),
                frozenset(str(n) for n in networks),
            )
        )
    return tuple(out)


def _algo_settings(args, file_cfg: dict) -> dict:
    settings = {}
    for key in ALGO_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
        elif key in file_cfg:
            settings[key] = _float(file_cfg[key], key)
        else:
            settings[key] = ALGO_DEFAULTS[key]
    return settings


def _fmt(value, column: str = "", round_usd: bool = False) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    value = float(value)
    if round_usd and column not in RATIO_COLUMNS and math.isfinite(value):
        return f"{round(value) + 0:d}"
    return repr(value)


def _emit(rows: list[dict], columns: Sequence[str], fmt: str, round_usd: bool, out) -> None:
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c], c, round_usd) for c in columns])
        return
    width = max(len(c) for c in columns)
    for i, row in enumerate(rows):
        if i:
            out.write("\n")
        for c in columns:
            out.write(f"{c:<{width}}  {_fmt(row[c], c, round_usd)}\n")


def _emit_table(rows: list[dict], columns: Sequence[str], fmt: str, round_usd: bool, out) -> None:
    """Like :func:`_emit` but plain output is one aligned line per row."""
    if fmt == "csv":
        _emit(rows, columns, fmt, round_usd, out)
        return
    cells = [[_fmt(r[c], c, round_usd) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(line[i]) for line in cells]) for i, c in enumerate(columns)]
    out.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
    for line in cells:
        out.write("  ".join(v.ljust(w) for v, w in zip(line, widths)).rstrip() + "\n")


def _open_out(path: Optional[str]):
    if path is None:
        return None
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    try:
        return p.open("w", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {p}: {exc.strerror}") from exc


# ---------------------------------------------------------------- commands


def cmd_simulate(args, out) -> int:
    overrides = {
        "rng_seed": args.seed,
        "n_scenarios": args.n_scenarios,
        "delta": args.delta,
        "max_bridge_stretch": args.max_stretch,
        "availability_prob": args.availability_prob,
    }
    if args.config is not None:
        params = load_params(args.config, **overrides)
    else:
        params = params_from_mapping({}, **overrides)
    batch = run_batch(params)
    out_dir = args.out if args.out is not None else "bridgeflow-out"
    try:
        paths = write_tables(batch, out_dir, round_usd=args.round)
    except OSError as exc:
        raise ConfigError(f"cannot write tables to {out_dir}: {exc.strerror or exc}") from exc

    ok = batch.ok_results()
    nonzero = sum(1 for r in ok if not r.decision.is_zero())
    max_abs = max(
        (
            max(abs(r.decision.delta_pq), abs(r.decision.delta_qp),
                abs(r.decision.simple_pq), abs(r.decision.simple_qp))
            for r in ok
        ),
        default=0.0,
    )
    failed = len(batch) - len(ok)
    out.write("parameters:\n" + params_echo(params) + "\n")
    summary = {
        "scenarios": len(batch),
        "failed": failed,
        "nonzero_transfers": nonzero,
        "max_abs_transfer": max_abs,
    }
    if args.format == "csv":
        _emit([summary], list(summary), "csv", args.round, out)
    else:
        out.write(f"scenarios:          {len(batch)} ({failed} failed)\n")
        out.write(f"nonzero transfers:  {nonzero}\n")
        out.write(f"max |transfer|:     {_fmt(max_abs, '', args.round)}\n")
    for name, path in paths.items():
        out.write(f"wrote {name}: {path}\n")
    return 0


def transfer_row(args, file_cfg: dict) -> tuple[dict, list]:
    """Resolve the single-scenario inputs and evaluate them; returns (row, columns)."""
    values = {}
    for key in SCENARIO_FLAGS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
        elif key in file_cfg:
            values[key] = _float(file_cfg[key], key)
        elif key.startswith("tbd"):
            values[key] = 0.0
        else:
            raise ConfigError(f"missing --{key.replace('_', '-')}")
    settings = _algo_settings(args, file_cfg)
    if args.bands_file is not None:
        assets = parse_assets(_read_yaml(args.bands_file))
    elif "assets" in file_cfg:
        assets = parse_assets(file_cfg["assets"])
    else:
        assets = SHARED_ASSETS

    result = pipeline(
        NetworkState(P, values["curr_p"], values["tbd_p"]),
        NetworkState(Q, values["curr_q"], values["tbd_q"]),
        BridgeLink(values["cap_pq"], values["cap_qp"]),
        assets,
        cfg=TrimConfig(settings["min_weight"], settings["max_weight"]),
        max_stretch=settings["max_stretch"],
        delta=settings["delta"],
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
    extra = {
        "net_pq": result.net_pq,
        "net_delta_pq": result.net_delta_pq,
        "residual_p": result.residual_p,
        "residual_q": result.residual_q,
        "flags": ";".join(sorted(result.flags)),
    }
    row = {**values, **settings, **primary, **intermediate, **extra}
    columns = [
        *SCENARIO_FLAGS, *ALGO_KEYS, *PRIMARY_COLUMNS, *INTERMEDIATE_COLUMNS, *TRANSFER_EXTRA
    ]
    return row, columns


def cmd_transfer(args, out) -> int:
    file_cfg = _read_mapping(args.config) if args.config is not None else {}
    row, columns = transfer_row(args, file_cfg)
    _emit([row], columns, args.format, args.round, out)
    return 0


def parse_route_config(data: dict) -> dict:
    """Networks, assets, bridges and settings from a route config mapping."""
    if "networks" not in data or not isinstance(data["networks"], list):
        raise ConfigError("route config needs a 'networks' list")
    networks = []
    for k, n in enumerate(data["networks"]):
        if not isinstance(n, dict) or "id" not in n or "current" not in n:
            raise ConfigError(f"network #{k + 1} needs 'id' and 'current'")
        networks.append(
            NetworkState(
                str(n["id"]),
                _float(n["current"], f"network {n['id']} current"),
                _float(n.get("tbd", 0.0), f"network {n['id']} tbd"),
            )
        )
    ids = [n.network_id for n in networks]
    assets = parse_assets(data.get("assets"), default_networks=ids)
    bridges = {}
    for k, b in enumerate(data.get("bridges") or []):
        if not isinstance(b, dict) or not {"from", "to", "cap"} <= set(b):
            raise ConfigError(f"bridge #{k + 1} needs 'from', 'to' and 'cap'")
        cap = _float(b["cap"], f"bridge #{k + 1} cap")
        back = _float(b.get("cap_back", cap), f"bridge #{k + 1} cap_back")
        bridges[(str(b["from"]), str(b["to"]))] = BridgeLink(cap, back)
    max_iter = data.get("max_iterations")
    return {
        "networks": networks,
        "assets": assets,
        "bridges": bridges,
        "max_iterations": None if max_iter is None else int(max_iter),
    }


ROUTE_TRANSFER_COLUMNS = (
    "step", "from", "to", "amount", "delta_ab", "delta_ba", "simple_ab", "simple_ba"
)
ROUTE_RESIDUAL_COLUMNS = (
    "network", "total_with_tbd", "min_capacity", "max_capacity", "outside_band", "net_flow"
)


def cmd_route(args, out) -> int:
    if args.config is None:
        raise ConfigError("route needs --config with networks, assets and bridges")
    data = _read_mapping(args.config)
    route_cfg = parse_route_config(data)
    settings = _algo_settings(args, data)
    max_iter = args.max_iterations if args.max_iterations is not None else route_cfg["max_iterations"]
    result = round_robin_route(
        route_cfg["networks"],
        route_cfg["assets"],
        route_cfg["bridges"],
        max_iterations=max_iter,
        cfg=TrimConfig(settings["min_weight"], settings["max_weight"]),
        delta=settings["delta"],
        max_stretch=settings["max_stretch"],
    )
    transfers = []
    for k, t in enumerate(result.transfers, start=1):
        src, dst, amount = (t.a, t.b, t.amount) if t.amount >= 0 else (t.b, t.a, -t.amount)
        d = t.decision if src == t.a else t.decision.swapped()
        transfers.append(
            {
                "step": str(k),
                "from": str(src),
                "to": str(dst),
                "amount": amount + 0.0,
                "delta_ab": d.delta_pq,
                "delta_ba": d.delta_qp,
                "simple_ab": d.simple_pq,
                "simple_ba": d.simple_qp,
            }
        )
    flows = result.net_flows()
    residuals = [
        {
            "network": str(n),
            "total_with_tbd": a.total_with_tbd,
            "min_capacity": a.min_capacity,
            "max_capacity": a.max_capacity,
            "outside_band": a.outside_band,
            "net_flow": flows[n] + 0.0,
        }
        for n, a in result.assessments.items()
    ]
    if args.format == "plain":
        out.write(f"stretch: {result.stretch!r}  iterations: {result.iterations}\n")
        out.write("transfers:\n")
        if transfers:
            _emit_table(transfers, ROUTE_TRANSFER_COLUMNS, "plain", args.round, out)
        else:
            out.write("(none)\n")
        out.write("residuals:\n")
    else:
        _emit_table(transfers, ROUTE_TRANSFER_COLUMNS, "csv", args.round, out)
        out.write("\n")
    _emit_table(residuals, ROUTE_RESIDUAL_COLUMNS, args.format, args.round, out)
    return 0


# ---------------------------------------------------------------- parser


GLOBAL_DEFAULTS = {"config": None, "seed": None, "out": None, "format": "plain", "round": False}


def _common_parser() -> argparse.ArgumentParser:
    # Global flags go on the top-level parser and on every subcommand, so
    # they work before or after the command name. SUPPRESS keeps an unset
    # copy from overwriting a set one; GLOBAL_DEFAULTS fills the gaps.
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="YAML/JSON configuration file")
    g.add_argument("--seed", type=int, help="random seed (simulate)")
    g.add_argument("--out", help="output directory for simulate, output file for transfer/route")
    g.add_argument("--format", choices=("csv", "plain"), help="output style (default: plain)")
    g.add_argument("--round", action="store_true", help="print USD amounts as whole numbers")
    return p


def _algo_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-stretch", dest="max_stretch", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--min-weight", dest="min_weight", type=float)
    p.add_argument("--max-weight", dest="max_weight", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgeflow",
        description="Size transfers across capacity-limited bridges between networks.",
        parents=[_common_parser()],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    sim = sub.add_parser("simulate", parents=[common], help="run a seeded scenario batch")
    sim.add_argument("--n-scenarios", dest="n_scenarios", type=int)
    sim.add_argument("--delta", type=float)
    sim.add_argument("--max-stretch", dest="max_stretch", type=float)
    sim.add_argument("--availability-prob", dest="availability_prob", type=float)
    sim.set_defaults(func=cmd_simulate)

    tr = sub.add_parser("transfer", parents=[common], help="evaluate one two-network scenario")
    for key in SCENARIO_FLAGS:
        tr.add_argument("--" + key.replace("_", "-"), dest=key, type=float)
    tr.add_argument("--bands-file", dest="bands_file", help="YAML list of asset bands")
    _algo_flags(tr)
    tr.set_defaults(func=cmd_transfer)

    rt = sub.add_parser("route", parents=[common], help="route transfers among N networks")
    rt.add_argument("--max-iterations", dest="max_iterations", type=int)
    _algo_flags(rt)
    rt.set_defaults(func=cmd_route)
    return parser


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    buffer = io.StringIO()
    try:
        status = args.func(args, buffer)
        if args.command != "simulate" and args.out is not None:
            with _open_out(args.out) as fh:
                fh.write(buffer.getvalue())
        else:
            stdout.write(buffer.getvalue())
    except (BridgeflowError, OSError) as exc:
        stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 1
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
