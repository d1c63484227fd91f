"""Scenario config files, benchmark sweeps and CSV/JSON report writing."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Sequence, Union

from . import __version__
from .engine import ConfigError, RunReport, SimConfig, run
from .environment import Environment, LossModel, WorkerPoolConfig, load_environment
from .mobility import GridSpec, generate_grid, load_trace
from .obstacle_loss import Material
from .radio_medium import RadioConfig

RECEPTIONS_HEADER = [
    "time_s", "tx_id", "rx_id", "distance_m", "pathloss_db", "obstacle_loss_db",
    "rx_power_dbm", "culled", "delivered",
]
BENCH_HEADER = [
    "scenario", "vehicle_count", "map_side_m", "worker_count", "repetition", "wall_time_s",
    "links_considered", "links_culled", "obstacle_tests",
]
TIMING_SCOPE = "beacon loop only; excludes environment load, mobility generation and report writing"

RADIO_KEYS = tuple(f.name for f in dataclasses.fields(RadioConfig))
GRID_KEYS = (
    "map_side", "road_spacing", "lanes_per_road", "lane_width", "building_height",
    "vehicle_count", "setback", "antenna_height", "speed_min", "speed_max",
)
MATERIAL_KEYS = ("material_name", "material_permittivity", "material_loss_tangent")
TOP_KEYS = ("sim_duration", "mobility", "loss_model", "worker_count", "seed", "trace",
            "environment", "jitter")
CONFIG_KEYS = TOP_KEYS + RADIO_KEYS + GRID_KEYS + MATERIAL_KEYS
_INT_KEYS = {"worker_count", "seed", "lanes_per_road", "vehicle_count", "message_length"}
_STR_KEYS = {"mobility", "loss_model", "trace", "environment", "material_name"}


# ---------------------------------------------------------------------------
# flat key/value config
# ---------------------------------------------------------------------------


def read_flat_file(path: Union[str, os.PathLike]) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in values:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value
    return values


def _coerce(key: str, value: Any) -> Any:
    if value is None or key in _STR_KEYS:
        return value
    try:
        if key in _INT_KEYS:
            if isinstance(value, str):
                return int(value, 0)
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse {key} = {value!r}") from None


def config_from_mapping(values: Mapping[str, Any]) -> SimConfig:
    """Build a :class:`SimConfig` from flat keys, filling the rest with defaults."""
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    v = {k: _coerce(k, val) for k, val in values.items()}
    mobility = v.get("mobility") or ("trace" if v.get("trace") else "grid")
    if mobility == "trace":
        clash = sorted(k for k in GRID_KEYS + MATERIAL_KEYS if k in v)
        if clash:
            raise ConfigError(f"trace mobility conflicts with grid-only option(s): {', '.join(clash)}")
    try:
        radio = RadioConfig(**{k: v[k] for k in RADIO_KEYS if k in v})
        default_mat = GridSpec().material
        material = Material(
            v.get("material_name", default_mat.name),
            v.get("material_permittivity", default_mat.relative_permittivity),
            v.get("material_loss_tangent", default_mat.loss_tangent),
        )
        grid_kwargs = {k: v[k] for k in GRID_KEYS if k in v}
        grid = GridSpec(seed=v.get("seed", 0), material=material, **grid_kwargs)
        pool = WorkerPoolConfig(v.get("worker_count", 1))
        loss_model = LossModel(v.get("loss_model", LossModel.DIELECTRIC.value))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return SimConfig(
        sim_duration=v.get("sim_duration", 100.0),
        mobility=mobility,
        loss_model=loss_model,
        radio=radio,
        pool=pool,
        seed=v.get("seed", 0),
        grid=grid,
        trace=v.get("trace"),
        environment=v.get("environment"),
        jitter=v.get("jitter", 0.0),
    )


def config_to_mapping(cfg: SimConfig) -> dict[str, Any]:
    """Flat echo of every resolved key; feeding it back reproduces ``cfg``."""
    out: dict[str, Any] = {
        "sim_duration": cfg.sim_duration,
        "mobility": cfg.mobility,
        "loss_model": cfg.loss_model.value,
        "worker_count": cfg.pool.worker_count,
        "seed": cfg.seed,
        "trace": cfg.trace,
        "environment": cfg.environment,
        "jitter": cfg.jitter,
    }
    out.update(dataclasses.asdict(cfg.radio))
    if cfg.mobility == "grid":
        for k in GRID_KEYS:
            out[k] = getattr(cfg.grid, k)
        out["material_name"] = cfg.grid.material.name
        out["material_permittivity"] = cfg.grid.material.relative_permittivity
        out["material_loss_tangent"] = cfg.grid.material.loss_tangent
    return {k: val for k, val in out.items() if val is not None}


def build_scenario(cfg: SimConfig):
    """Environment plus mobility source for ``cfg`` (not timed)."""
    if cfg.mobility == "trace":
        env = load_environment(cfg.environment) if cfg.environment else Environment()
        return env, load_trace(cfg.trace)
    env, vehicles = generate_grid(cfg.grid)
    if cfg.environment:
        env = load_environment(cfg.environment)
    return env, vehicles


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

SWEEP_VARIABLES = ("vehicles", "map_side", "threads")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    repetitions: int = 3
    threads: tuple = (1,)
    scenario: str = "sweep"
    base: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if not self.values:
            raise ConfigError("sweep values must not be empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        if self.variable != "threads" and self.base.mobility == "trace":
            raise ConfigError(f"cannot sweep {self.variable} over a trace scenario")

    def configurations(self) -> list[SimConfig]:
        out = []
        threads = self.values if self.variable == "threads" else self.threads
        for value in self.values if self.variable != "threads" else (None,):
            base = self.base
            if self.variable == "vehicles":
                base = dataclasses.replace(
                    base, grid=dataclasses.replace(base.grid, vehicle_count=int(value)))
            elif self.variable == "map_side":
                base = dataclasses.replace(
                    base, grid=dataclasses.replace(base.grid, map_side=float(value)))
            for k in threads:
                out.append(dataclasses.replace(base, pool=WorkerPoolConfig(int(k))))
        return out


def _split_list(text: str, cast: Callable[[str], Any]) -> tuple:
    return tuple(cast(p.strip()) for p in text.split(",") if p.strip())


def load_sweep(path: Union[str, os.PathLike], base: Optional[SimConfig] = None) -> SweepSpec:
    """Read a sweep file; keys other than the sweep's own are base-config overrides.

    A ``config`` key names a base config file, resolved relative to the sweep
    file. Explicit ``base`` wins over both.
    """
    raw = read_flat_file(path)
    try:
        variable = raw.pop("variable")
        values_text = raw.pop("values")
    except KeyError as exc:
        raise ConfigError(f"{path}: sweep file needs key {exc.args[0]!r}") from None
    cast = float if variable == "map_side" else int
    try:
        values = _split_list(values_text, cast)
        threads = _split_list(raw.pop("threads", "1"), int)
        repetitions = int(raw.pop("repetitions", "3"))
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    scenario = raw.pop("scenario", Path(path).stem)
    if base is None:
        merged: dict[str, Any] = {}
        ref = raw.pop("config", None)
        if ref is not None:
            merged.update(read_flat_file(Path(path).parent / ref))
        merged.update(raw)
        base = config_from_mapping(merged)
    return SweepSpec(variable, values, repetitions, threads, scenario, base)


@dataclass(frozen=True)
class BenchRecord:
    scenario: str
    vehicle_count: int
    map_side: float
    worker_count: int
    repetition: int
    wall_time_s: float
    links_considered: int
    links_culled: int
    obstacle_tests: int

    def row(self) -> list:
        return [self.scenario, self.vehicle_count, _fmt(self.map_side), self.worker_count,
                self.repetition, repr(self.wall_time_s), self.links_considered,
                self.links_culled, self.obstacle_tests]


class SweepError(RuntimeError):
    def __init__(self, message: str, records: list[BenchRecord]):
        super().__init__(message)
        self.records = records


def run_sweep(
    spec: SweepSpec,
    sink: Optional[Callable[[BenchRecord], None]] = None,
) -> list[BenchRecord]:
    """One record per configuration and repetition, run strictly one at a time.

    Each record is passed to ``sink`` as soon as it exists. On failure a
    :class:`SweepError` carries the records completed so far.
    """
    records: list[BenchRecord] = []
    for cfg in spec.configurations():
        try:
            env, mobility = build_scenario(cfg)
            for rep in range(spec.repetitions):
                report = run(cfg, env, mobility, keep_links=False)
                rec = BenchRecord(
                    scenario=spec.scenario,
                    vehicle_count=len(mobility),
                    map_side=_map_side(cfg, env),
                    worker_count=cfg.pool.worker_count,
                    repetition=rep,
                    wall_time_s=report.wall_time,
                    links_considered=report.stats.links_considered,
                    links_culled=report.stats.links_culled,
                    obstacle_tests=report.stats.obstacle_tests,
                )
                records.append(rec)
                if sink is not None:
                    sink(rec)
        except Exception as exc:
            raise SweepError(f"sweep aborted at {config_to_mapping(cfg)}: {exc}", records) from exc
    return records


def _map_side(cfg: SimConfig, env: Environment) -> float:
    if cfg.mobility == "grid":
        return float(cfg.grid.map_side)
    x0, y0, _, x1, y1, _ = env.bounds
    return float(max(x1 - x0, y1 - y0))


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True)
class OutputPaths:
    receptions: Path
    bench: Path
    metadata: Path

    @classmethod
    def in_dir(cls, out_dir: Union[str, os.PathLike]) -> "OutputPaths":
        d = Path(out_dir)
        return cls(d / "receptions.csv", d / "bench.csv", d / "run_metadata.json")


def _open_for_write(path: Path):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def write_receptions(report: Optional[RunReport], path: Path) -> int:
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECEPTIONS_HEADER)
        table = report.links if report is not None else None
        if table is None:
            return 0
        ids = [str(i) for i in table.ids]
        times = list(map(repr, table.time.tolist()))
        culled = table.culled.tolist()
        delivered = table.delivered.tolist()
        dist = list(map(repr, table.distance.tolist()))
        pl = table.pathloss.tolist()
        ol = table.obstacle_loss.tolist()
        rp = table.rx_power.tolist()
        tx = table.tx.tolist()
        rx = table.rx.tolist()
        rows = (
            (times[k], ids[tx[k]], ids[rx[k]], dist[k],
             "" if culled[k] else repr(pl[k]),
             "" if culled[k] else repr(ol[k]),
             "" if culled[k] else repr(rp[k]),
             int(culled[k]), int(delivered[k]))
            for k in range(len(times))
        )
        writer.writerows(rows)
        return len(times)


def write_bench(records: Iterable[BenchRecord], path: Path) -> int:
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        n = 0
        for rec in records:
            writer.writerow(rec.row())
            n += 1
        return n


class BenchWriter:
    """Incremental bench CSV: header on open, one flushed row per record."""

    def __init__(self, path: Path):
        self.path = path
        self._fh = _open_for_write(path)
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(BENCH_HEADER)
        self._fh.flush()

    def __call__(self, rec: BenchRecord) -> None:
        self._writer.writerow(rec.row())
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "BenchWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def run_metadata(report: Optional[RunReport], cfg: SimConfig,
                 records: Sequence[BenchRecord] = ()) -> dict[str, Any]:
    meta: dict[str, Any] = {
        "package_version": __version__,
        "python": platform.python_version(),
        "cpu_count": os.cpu_count(),
        "timing_scope": TIMING_SCOPE,
        "config": config_to_mapping(cfg),
        "bench_records": len(records),
    }
    if report is not None:
        meta["run"] = {
            "wall_time_s": report.wall_time,
            "transmissions": report.transmissions,
            "link_results": len(report.links) if report.links is not None else 0,
            "stats": dataclasses.asdict(report.stats),
        }
    return meta


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    return obj


def emit_reports(
    report: Optional[RunReport],
    records: Sequence[BenchRecord],
    paths: OutputPaths,
    cfg: Optional[SimConfig] = None,
) -> OutputPaths:
    """Write receptions CSV, bench CSV and the run-metadata JSON."""
    cfg = cfg if cfg is not None else (report.config if report is not None else SimConfig())
    write_receptions(report, paths.receptions)
    write_bench(records, paths.bench)
    write_metadata(run_metadata(report, cfg, records), paths.metadata)
    return paths


def write_metadata(meta: Mapping[str, Any], path: Path) -> None:
    with _open_for_write(path) as fh:
        json.dump(_json_safe(dict(meta)), fh, indent=2, sort_keys=True)
        fh.write("\n")


def record_for_run(report: RunReport, scenario: str, env: Environment, vehicle_count: int,
                   repetition: int = 0) -> BenchRecord:
    cfg = report.config
    return BenchRecord(scenario, vehicle_count, _map_side(cfg, env), cfg.pool.worker_count,
                       repetition, report.wall_time, report.stats.links_considered,
                       report.stats.links_culled, report.stats.obstacle_tests)
