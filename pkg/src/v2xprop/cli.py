"""Command-line front end: single runs and benchmark sweeps."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .bench import (
    BenchWriter,
    OutputPaths,
    SweepError,
    build_scenario,
    config_from_mapping,
    emit_reports,
    load_sweep,
    read_flat_file,
    record_for_run,
    run_metadata,
    run_sweep,
    write_metadata,
    write_receptions,
)
from .engine import ConfigError, SimConfig, run

# CLI flag dest -> config key
_FLAG_KEYS = {
    "threads": "worker_count",
    "vehicles": "vehicle_count",
    "map_side": "map_side",
    "duration": "sim_duration",
    "boundary": "distance_boundary",
    "loss_model": "loss_model",
    "trace": "trace",
    "seed": "seed",
}


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="v2xprop",
        description="Simulate periodic V2X beaconing over a grid city and time the "
                    "obstacle-attenuation hot path.",
    )
    p.add_argument("--config", type=Path, help="flat key = value scenario file")
    p.add_argument("--threads", type=_positive_int, help="evaluation worker count")
    p.add_argument("--vehicles", type=_count, help="vehicle count (grid mobility)")
    p.add_argument("--map-side", dest="map_side", type=_positive_float, help="map side in meters")
    p.add_argument("--duration", type=_positive_float, help="simulated seconds")
    p.add_argument("--boundary", type=_positive_float,
                   help="distance boundary in meters ('inf' disables culling)")
    p.add_argument("--loss-model", dest="loss_model", choices=("ideal", "dielectric"))
    p.add_argument("--trace", type=str, help="vehicle trace CSV (selects trace mobility)")
    p.add_argument("--seed", type=_seed)
    p.add_argument("--out", type=Path, default=Path("v2x_out"), help="output directory")
    p.add_argument("--sweep", type=Path, help="sweep spec file; runs a benchmark sweep")
    return p


@dataclass(frozen=True)
class CliRequest:
    config: SimConfig
    out_dir: Path
    sweep: Optional[Path]
    overrides: dict
    config_file: Optional[Path]


def parse_cli(args: Optional[Sequence[str]] = None,
              parser: Optional[argparse.ArgumentParser] = None) -> CliRequest:
    """Resolve flags over config file over built-in defaults."""
    parser = parser or build_parser()
    ns = parser.parse_args(args)
    values: dict = {}
    if ns.config is not None:
        try:
            values.update(read_flat_file(ns.config))
        except OSError as exc:
            parser.error(f"cannot read config {ns.config}: {exc.strerror}")
        except ConfigError as exc:
            parser.error(str(exc))
    overrides = {key: getattr(ns, dest) for dest, key in _FLAG_KEYS.items()
                 if getattr(ns, dest) is not None}
    if "trace" in overrides:
        values["mobility"] = "trace"
    values.update(overrides)
    try:
        cfg = config_from_mapping(values)
    except ConfigError as exc:
        parser.error(str(exc))
    return CliRequest(cfg, ns.out, ns.sweep, overrides, ns.config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    req = parse_cli(argv, parser)
    paths = OutputPaths.in_dir(req.out_dir)

    if req.sweep is not None:
        base = req.config if (req.config_file is not None or req.overrides) else None
        try:
            spec = load_sweep(req.sweep, base)
        except (OSError, ConfigError) as exc:
            parser.error(str(exc))
        with BenchWriter(paths.bench) as sink:
            try:
                records = run_sweep(spec, sink)
            except SweepError as exc:
                print(f"error: {exc} ({len(exc.records)} records kept in {paths.bench})",
                      file=sys.stderr)
                return 1
        write_receptions(None, paths.receptions)
        write_metadata(run_metadata(None, spec.base, records), paths.metadata)
        print(f"{len(records)} bench records -> {paths.bench}")
        return 0

    env, mobility = build_scenario(req.config)
    report = run(req.config, env, mobility)
    record = record_for_run(report, "single", env, len(mobility))
    emit_reports(report, [record], paths, req.config)
    s = report.stats
    print(
        f"{report.transmissions} transmissions, {s.links_considered} links "
        f"({s.links_culled} culled), {s.obstacle_tests} obstacle tests, "
        f"wall {report.wall_time:.3f} s with {req.config.pool.worker_count} worker(s) -> {req.out_dir}"
    )
    return 0
