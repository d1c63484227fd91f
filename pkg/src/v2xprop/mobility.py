"""Synthetic grid city, constant-speed lane mobility and CSV trace ingestion."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .environment import Environment, Obstacle
from .geometry import Prism, Vec3
from .obstacle_loss import Material

TRACE_HEADER = ["time_s", "vehicle_id", "x_m", "y_m", "z_m"]


class InvalidSpecError(ValueError):
    pass


class TraceFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Vehicle:
    id: object
    position: Vec3
    velocity: Vec3 = Vec3(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class GridSpec:
    map_side: float = 2000.0
    road_spacing: float = 100.0
    lanes_per_road: int = 2
    lane_width: float = 3.2
    building_height: float = 10.0
    vehicle_count: int = 100
    seed: int = 0
    setback: float = 0.0
    antenna_height: float = 1.5
    speed_min: float = 8.0
    speed_max: float = 14.0
    material: Material = field(default=Material("brick", 4.5, 0.02))

    @property
    def road_width(self) -> float:
        return self.lanes_per_road * self.lane_width

    @property
    def building_side(self) -> float:
        return self.road_spacing - self.road_width - 2.0 * self.setback

    def validate(self) -> None:
        if not self.road_spacing > 0:
            raise InvalidSpecError(f"road_spacing must be > 0, got {self.road_spacing}")
        if self.map_side < self.road_spacing:
            raise InvalidSpecError(
                f"map_side {self.map_side} is smaller than road_spacing {self.road_spacing}"
            )
        if self.vehicle_count < 0:
            raise InvalidSpecError(f"vehicle_count must be >= 0, got {self.vehicle_count}")
        if self.lanes_per_road < 1 or not self.lane_width > 0:
            raise InvalidSpecError("need at least one lane of positive width")
        if self.building_side <= 0:
            raise InvalidSpecError(
                f"building side {self.building_side:g} m <= 0: roads leave no room for buildings"
            )
        if not self.building_height > 0:
            raise InvalidSpecError(f"building_height must be > 0, got {self.building_height}")
        if not 0 <= self.speed_min <= self.speed_max:
            raise InvalidSpecError("speed range must satisfy 0 <= speed_min <= speed_max")


def road_centres(map_side: float, spacing: float) -> np.ndarray:
    """Road centre coordinates along one axis; the road at 0 also serves ``map_side``."""
    count = math.ceil(map_side / spacing - 1e-9)
    return np.arange(count) * spacing


def generate_grid(spec: GridSpec) -> tuple[Environment, list[Vehicle]]:
    """Manhattan grid with one building per block and vehicles on lane centrelines."""
    spec.validate()
    side = float(spec.map_side)
    roads = road_centres(side, spec.road_spacing)
    half_road = spec.road_width / 2.0
    margin = half_road + spec.setback
    # block k spans roads[k] .. roads[k+1], the last one wraps to map_side
    starts = roads + margin
    ends = np.append(roads[1:], side) - margin
    spans = [(a, b) for a, b in zip(starts, ends) if b - a > 0]

    obstacles = []
    for y0, y1 in spans:
        for x0, x1 in spans:
            prism = Prism.box((x0, y0, 0.0), (x1 - x0, y1 - y0, spec.building_height))
            obstacles.append(Obstacle(len(obstacles), prism, spec.material.name))
    env = Environment(
        tuple(obstacles),
        {spec.material.name: spec.material},
        bounds=(0.0, 0.0, 0.0, side, side, float(spec.building_height)),
    )

    rng = np.random.default_rng(spec.seed)
    n = spec.vehicle_count
    horizontal = rng.integers(0, 2, size=n).astype(bool)
    road_idx = rng.integers(0, len(roads), size=n)
    lane_idx = rng.integers(0, spec.lanes_per_road, size=n)
    along = rng.uniform(0.0, side, size=n)
    speed = rng.uniform(spec.speed_min, spec.speed_max, size=n)

    lane_offset = (lane_idx - (spec.lanes_per_road - 1) / 2.0) * spec.lane_width
    # lanes left of the road centre drive towards -axis
    direction = np.where(lane_offset < 0, -1.0, 1.0)
    across = _wrap(roads[road_idx] + lane_offset, 0.0, side)

    vehicles = []
    for i in range(n):
        if horizontal[i]:
            pos = Vec3(float(along[i]), float(across[i]), spec.antenna_height)
            vel = Vec3(float(direction[i] * speed[i]), 0.0, 0.0)
        else:
            pos = Vec3(float(across[i]), float(along[i]), spec.antenna_height)
            vel = Vec3(0.0, float(direction[i] * speed[i]), 0.0)
        vehicles.append(Vehicle(i, pos, vel))
    return env, vehicles


def _wrap(values, lo: float, hi: float):
    width = hi - lo
    out = np.mod(np.asarray(values, dtype=np.float64) - lo, width)
    # fmod of a tiny negative can round up to exactly ``width``
    out = np.where(out >= width, 0.0, out)
    return out + lo


def _bounds_2d(bounds: Sequence[float]) -> tuple[float, float, float, float]:
    if len(bounds) == 6:
        return bounds[0], bounds[1], bounds[3], bounds[4]
    if len(bounds) == 4:
        return tuple(bounds)  # type: ignore[return-value]
    raise ValueError("bounds must be (xmin, ymin, xmax, ymax) or a 6-tuple extent")


def step_positions(
    vehicles: Sequence[Vehicle], dt: float, bounds: Sequence[float]
) -> list[Vehicle]:
    """Advance every vehicle by ``velocity * dt``, wrapping at the map edges."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    xmin, ymin, xmax, ymax = _bounds_2d(bounds)
    out = []
    for v in vehicles:
        x = float(_wrap(v.position.x + v.velocity.x * dt, xmin, xmax))
        y = float(_wrap(v.position.y + v.velocity.y * dt, ymin, ymax))
        z = v.position.z + v.velocity.z * dt
        out.append(Vehicle(v.id, Vec3(x, y, z), v.velocity))
    return out


class GridMobility:
    """Closed-form constant-speed motion on a torus-wrapped map."""

    def __init__(self, vehicles: Sequence[Vehicle], bounds: Sequence[float]):
        self.ids = [v.id for v in sorted(vehicles, key=lambda v: v.id)]
        ordered = sorted(vehicles, key=lambda v: v.id)
        self._p0 = np.array([v.position for v in ordered], dtype=np.float64).reshape(-1, 3)
        self._vel = np.array([v.velocity for v in ordered], dtype=np.float64).reshape(-1, 3)
        self._bounds = _bounds_2d(bounds)

    def __len__(self) -> int:
        return len(self.ids)

    def positions_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Indices into ``ids`` of vehicles present at ``t`` and their positions."""
        xmin, ymin, xmax, ymax = self._bounds
        p = self._p0 + self._vel * t
        p[:, 0] = _wrap(p[:, 0], xmin, xmax)
        p[:, 1] = _wrap(p[:, 1], ymin, ymax)
        return np.arange(len(self.ids)), p


@dataclass
class Trace:
    """Piecewise-constant positions per vehicle.

    A vehicle is absent before its first sample and then holds each sampled
    position until the next sample.
    """

    ids: list = field(default_factory=list)
    times: list = field(default_factory=list)  # per vehicle, increasing float arrays
    samples: list = field(default_factory=list)  # per vehicle, (k, 3) arrays

    def __len__(self) -> int:
        return len(self.ids)

    def positions_at(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        present = []
        rows = []
        for i, (times, pos) in enumerate(zip(self.times, self.samples)):
            k = int(np.searchsorted(times, t, side="right")) - 1
            if k >= 0:
                present.append(i)
                rows.append(pos[k])
        if not rows:
            return np.zeros(0, dtype=np.int64), np.zeros((0, 3))
        return np.array(present, dtype=np.int64), np.array(rows)


def _id_key(vid: str):
    try:
        return (0, int(vid), vid)
    except ValueError:
        return (1, 0, vid)


def parse_trace(lines: Iterable[str]) -> Trace:
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        return Trace()
    if header != TRACE_HEADER:
        raise TraceFormatError(f"header must be {','.join(TRACE_HEADER)!r}", 1)

    per_vehicle: dict[str, tuple[list[float], list[tuple[float, float, float]]]] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != 5:
            raise TraceFormatError(f"expected 5 fields, got {len(row)}", line)
        vid = row[1].strip()
        if not vid:
            raise TraceFormatError("empty vehicle_id", line)
        try:
            t, x, y, z = (float(row[k]) for k in (0, 2, 3, 4))
        except ValueError:
            raise TraceFormatError(f"unparsable number in {row!r}", line) from None
        if not all(math.isfinite(v) for v in (t, x, y, z)):
            raise TraceFormatError("non-finite value", line)
        times, pos = per_vehicle.setdefault(vid, ([], []))
        if times and t <= times[-1]:
            raise TraceFormatError(
                f"timestamp {t} for vehicle {vid!r} does not increase (previous {times[-1]})", line
            )
        times.append(t)
        pos.append((x, y, z))

    trace = Trace()
    for vid in sorted(per_vehicle, key=_id_key):
        times, pos = per_vehicle[vid]
        trace.ids.append(int(vid) if _id_key(vid)[0] == 0 else vid)
        trace.times.append(np.array(times))
        trace.samples.append(np.array(pos, dtype=np.float64))
    return trace


def load_trace(source: Union[str, os.PathLike, io.TextIOBase]) -> Trace:
    """Read a ``time_s,vehicle_id,x_m,y_m,z_m`` CSV file."""
    if hasattr(source, "read"):
        return parse_trace(source)  # type: ignore[arg-type]
    with open(source, newline="") as fh:
        return parse_trace(fh)
