"""Periodic-beacon simulation loop.

Every vehicle beacons once per interval. At each epoch the transmitters are
processed in ascending id order and each one is evaluated against every other
vehicle present at that instant. Only the link evaluation is parallel; the
loop itself runs on the calling thread.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Iterator, Optional, Sequence, Union

import numpy as np

from .environment import (
    Environment,
    EvalStats,
    LinkArrays,
    LossModel,
    WorkerPool,
    WorkerPoolConfig,
    evaluate_arrays,
    warm_up,
)
from .mobility import GridMobility, GridSpec, Trace, Vehicle
from .radio_medium import LinkResult, RadioConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Transmission:
    tx_id: Any
    position: tuple
    time: float
    message_length: int = 140


@dataclass(frozen=True)
class SimConfig:
    sim_duration: float = 100.0
    mobility: str = "grid"
    loss_model: LossModel = LossModel.DIELECTRIC
    radio: RadioConfig = field(default_factory=RadioConfig)
    pool: WorkerPoolConfig = field(default_factory=WorkerPoolConfig)
    seed: int = 0
    grid: GridSpec = field(default_factory=GridSpec)
    trace: Optional[str] = None
    environment: Optional[str] = None
    # per-vehicle beacon offset drawn once from U[0, jitter), seconds
    jitter: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "loss_model", LossModel(self.loss_model))
        if not self.sim_duration > 0:
            raise ConfigError(f"sim_duration must be > 0, got {self.sim_duration}")
        if self.mobility not in ("grid", "trace"):
            raise ConfigError(f"mobility must be 'grid' or 'trace', got {self.mobility!r}")
        if self.mobility == "trace" and self.trace is None:
            raise ConfigError("trace mobility needs a trace file")
        if self.mobility == "grid" and self.trace is not None:
            raise ConfigError("a trace file was given but mobility is 'grid'")
        if not 0.0 <= self.jitter < self.radio.beacon_interval:
            raise ConfigError("jitter must lie in [0, beacon_interval)")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def rounds(self) -> int:
        return beacon_rounds(self.sim_duration, self.radio.beacon_interval)


def beacon_rounds(duration: float, interval: float) -> int:
    """``floor(duration / interval)``, tolerant of ratios like 0.3 / 0.1."""
    return math.floor(duration / interval + 1e-9)


@dataclass
class LinkTable:
    """Columnar store of every link result of a run, in emission order."""

    ids: list
    time: np.ndarray
    tx: np.ndarray  # indices into ``ids``
    rx: np.ndarray
    distance: np.ndarray
    pathloss: np.ndarray
    obstacle_loss: np.ndarray
    rx_power: np.ndarray
    culled: np.ndarray
    delivered: np.ndarray

    def __len__(self) -> int:
        return len(self.time)

    @classmethod
    def empty(cls, ids: Sequence) -> "LinkTable":
        f = np.zeros(0)
        b = np.zeros(0, dtype=bool)
        i = np.zeros(0, dtype=np.int64)
        return cls(list(ids), f, i, i, f, f, f, f, b, b)

    def __iter__(self) -> Iterator[LinkResult]:
        for k in range(len(self)):
            culled = bool(self.culled[k])
            yield LinkResult(
                tx_id=self.ids[self.tx[k]],
                rx_id=self.ids[self.rx[k]],
                distance=float(self.distance[k]),
                pathloss=None if culled else float(self.pathloss[k]),
                obstacle_loss=None if culled else float(self.obstacle_loss[k]),
                rx_power=None if culled else float(self.rx_power[k]),
                delivered=bool(self.delivered[k]),
                culled=culled,
            )


class _Collector:
    def __init__(self, ids: Sequence):
        self.ids = list(ids)
        self.chunks: list[tuple] = []

    def add(self, t: float, tx: int, rx: np.ndarray, arrays: LinkArrays) -> None:
        self.chunks.append((t, tx, rx, arrays))

    def table(self) -> LinkTable:
        if not self.chunks:
            return LinkTable.empty(self.ids)
        sizes = [len(c[2]) for c in self.chunks]
        cols = [np.concatenate([c[3][j] for c in self.chunks]) for j in range(6)]
        return LinkTable(
            self.ids,
            np.repeat([c[0] for c in self.chunks], sizes).astype(np.float64),
            np.repeat([c[1] for c in self.chunks], sizes).astype(np.int64),
            np.concatenate([c[2] for c in self.chunks]).astype(np.int64),
            *cols,
        )


@dataclass
class RunReport:
    links: Optional[LinkTable]
    stats: EvalStats
    wall_time: float
    transmissions: int
    config: SimConfig

    def link_results(self) -> Iterator[LinkResult]:
        if self.links is None:
            return iter(())
        return iter(self.links)


Mobility = Union[GridMobility, Trace]


def _as_mobility(cfg: SimConfig, env: Environment, vehicles) -> Mobility:
    if isinstance(vehicles, Trace):
        if cfg.mobility != "trace":
            raise ConfigError("got a trace but the config selects grid mobility")
        return vehicles
    if cfg.mobility == "trace":
        raise ConfigError("config selects trace mobility but no trace was supplied")
    if isinstance(vehicles, GridMobility):
        return vehicles
    side = cfg.grid.map_side
    return GridMobility(list(vehicles), (0.0, 0.0, side, side))


def run(
    cfg: SimConfig,
    env: Environment,
    vehicles: Union[Sequence[Vehicle], Mobility],
    keep_links: bool = True,
) -> RunReport:
    """Simulate ``cfg.sim_duration`` seconds of beaconing.

    ``wall_time`` covers the beacon loop only. With ``keep_links`` False the
    per-link results are dropped and only the counters survive, which is what
    the benchmark sweeps use.
    """
    mobility = _as_mobility(cfg, env, vehicles)
    interval = cfg.radio.beacon_interval
    rounds = cfg.rounds
    offsets = None
    if cfg.jitter > 0:
        offsets = np.random.default_rng(cfg.seed).uniform(0.0, cfg.jitter, size=len(mobility))
    warm_up(env)
    stats = EvalStats()
    collector = _Collector(mobility.ids) if keep_links else None
    transmissions = 0

    with WorkerPool(cfg.pool) as pool:
        start = time.perf_counter()
        for k in range(rounds):
            epoch = k * interval
            present, pos = mobility.positions_at(epoch)
            for j in range(len(present)):
                tx_index = int(present[j])
                t = epoch
                now_present, now_pos = present, pos
                if offsets is not None:
                    t = epoch + float(offsets[tx_index])
                    if t >= cfg.sim_duration:
                        continue
                    now_present, now_pos = mobility.positions_at(t)
                    hit = np.flatnonzero(now_present == tx_index)
                    if len(hit) == 0:
                        continue
                    j = int(hit[0])
                rx_index = np.delete(now_present, j)
                rx_pos = np.delete(now_pos, j, axis=0)
                arrays = evaluate_arrays(env, now_pos[j], rx_pos, cfg.radio, cfg.loss_model,
                                         stats, pool)
                transmissions += 1
                if collector is not None:
                    collector.add(t, tx_index, rx_index, arrays)
        wall = time.perf_counter() - start

    return RunReport(
        links=collector.table() if collector is not None else None,
        stats=stats,
        wall_time=wall,
        transmissions=transmissions,
        config=cfg,
    )
