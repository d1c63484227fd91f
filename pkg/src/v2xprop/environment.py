"""Obstacle store, XML ingestion and the link evaluators.

The evaluators scan every obstacle for every non-culled link; there is no
spatial index. The parallel evaluator splits the receiver list
into static contiguous blocks, one per worker; each link is computed by the
same compiled kernel regardless of which worker runs it, so the output is
bit-identical for every worker count.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from types import MappingProxyType
from typing import Any, Iterable, Mapping, NamedTuple, Optional, Sequence, Union
from xml.parsers import expat

import numpy as np
from numba import njit

from .geometry import (
    GRAZING_EPS,
    Intersection,
    InvalidGeometryError,
    Prism,
    Segment,
    clip_segment,
)
from .obstacle_loss import Material, fresnel_pair_factor, traversal_factor
from .radio_medium import LinkResult, RadioConfig, pathloss_core


class EnvironmentFormatError(ValueError):
    """Malformed environment document; the message carries the line number."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class LossModel(str, enum.Enum):
    IDEAL = "ideal"
    DIELECTRIC = "dielectric"


@dataclass(frozen=True)
class Obstacle:
    id: int
    prism: Prism
    material: str
    type: str = "cuboid"


@dataclass(frozen=True)
class Environment:
    """Immutable set of obstacles with dense ids ``0..m-1``."""

    obstacles: tuple[Obstacle, ...] = ()
    materials: Mapping[str, Material] = field(default_factory=dict)
    bounds: Optional[tuple[float, float, float, float, float, float]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "materials", MappingProxyType(dict(self.materials)))
        for i, ob in enumerate(self.obstacles):
            if ob.id != i:
                raise ValueError(f"obstacle ids must be dense, found {ob.id} at index {i}")
            if ob.material not in self.materials:
                raise ValueError(f"obstacle {i} references unknown material {ob.material!r}")
        if self.bounds is None:
            object.__setattr__(self, "bounds", _extent(self.obstacles))

    def __len__(self) -> int:
        return len(self.obstacles)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Environment):
            return NotImplemented
        return (
            self.obstacles == other.obstacles
            and dict(self.materials) == dict(other.materials)
            and self.bounds == other.bounds
        )

    __hash__ = None  # type: ignore[assignment]

    def material_of(self, obstacle_id: int) -> Material:
        return self.materials[self.obstacles[obstacle_id].material]

    @cached_property
    def arrays(self) -> "_ObstacleArrays":
        return _ObstacleArrays.build(self)


def _extent(obstacles: Sequence[Obstacle]) -> tuple[float, ...]:
    if not obstacles:
        return (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    b = np.array([ob.prism.bounds() for ob in obstacles])
    return (*(float(v) for v in b[:, :3].min(axis=0)), *(float(v) for v in b[:, 3:].max(axis=0)))


class _ObstacleArrays(NamedTuple):
    halfplanes: np.ndarray  # (m, kmax, 3)
    nedges: np.ndarray  # (m,)
    z_lo: np.ndarray
    z_hi: np.ndarray
    permittivity: np.ndarray
    loss_tangent: np.ndarray
    props: np.ndarray  # (m, 5): z_lo, z_hi, eps_r, tan_delta, edge count

    @classmethod
    def build(cls, env: Environment) -> "_ObstacleArrays":
        m = len(env.obstacles)
        kmax = max((len(ob.prism.footprint) for ob in env.obstacles), default=3)
        hp = np.zeros((m, kmax, 3))
        nedges = np.zeros(m, dtype=np.int64)
        zlo, zhi, eps, tand = (np.zeros(m) for _ in range(4))
        for ob in env.obstacles:
            rows = ob.prism.halfplanes
            hp[ob.id, : len(rows)] = rows
            nedges[ob.id] = len(rows)
            zlo[ob.id] = ob.prism.base_z
            zhi[ob.id] = ob.prism.top_z
            mat = env.materials[ob.material]
            eps[ob.id] = mat.relative_permittivity
            tand[ob.id] = mat.loss_tangent
        props = np.column_stack([zlo, zhi, eps, tand, nedges.astype(np.float64)]).reshape(m, 5)
        arrays = cls(hp, nedges, zlo, zhi, eps, tand, np.ascontiguousarray(props))
        for a in arrays:
            a.setflags(write=False)
        return arrays


# ---------------------------------------------------------------------------
# XML format
# ---------------------------------------------------------------------------

_MATERIAL_ATTRS = {"name", "permittivity", "lossTangent"}
_OBJECT_ATTRS = {"type", "position", "size", "material"}


def _floats(text: str, count: int, what: str, line: int) -> list[float]:
    parts = text.split()
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise EnvironmentFormatError(f"unparsable {what} {text!r}", line) from None
    if len(values) != count or not all(math.isfinite(v) for v in values):
        raise EnvironmentFormatError(f"{what} needs {count} finite numbers, got {text!r}", line)
    return values


def _check_attrs(tag: str, attrs: Mapping[str, str], allowed: set[str], line: int) -> None:
    unknown = sorted(set(attrs) - allowed)
    if unknown:
        raise EnvironmentFormatError(f"<{tag}> has unknown attribute(s) {', '.join(unknown)}", line)
    missing = sorted(allowed - set(attrs))
    if missing:
        raise EnvironmentFormatError(f"<{tag}> is missing attribute(s) {', '.join(missing)}", line)


def parse_environment(text: Union[str, bytes]) -> Environment:
    """Build an :class:`Environment` from an ``<environment>`` document."""
    parser = expat.ParserCreate()
    elements: list[tuple[str, dict[str, str], int, int]] = []
    depth = 0

    def start(tag: str, attrs: dict[str, str]) -> None:
        nonlocal depth
        elements.append((tag, attrs, parser.CurrentLineNumber, depth))
        depth += 1

    def end(tag: str) -> None:
        nonlocal depth
        depth -= 1

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    try:
        parser.Parse(text, True)
    except expat.ExpatError as exc:
        raise EnvironmentFormatError(f"not well-formed XML: {expat.errors.messages[exc.code]}",
                                     exc.lineno) from None

    if not elements or elements[0][0] != "environment":
        raise EnvironmentFormatError("root element must be <environment>", 1)
    _check_attrs("environment", elements[0][1], set(), elements[0][2])

    materials: dict[str, Material] = {}
    pending: list[tuple[dict[str, str], int]] = []
    for tag, attrs, line, level in elements[1:]:
        if level != 1:
            raise EnvironmentFormatError(f"<{tag}> must be a direct child of <environment>", line)
        if tag == "material":
            _check_attrs(tag, attrs, _MATERIAL_ATTRS, line)
            name = attrs["name"]
            if name in materials:
                raise EnvironmentFormatError(f"duplicate material {name!r}", line)
            eps = _floats(attrs["permittivity"], 1, "permittivity", line)[0]
            tand = _floats(attrs["lossTangent"], 1, "lossTangent", line)[0]
            try:
                materials[name] = Material(name, eps, tand)
            except ValueError as exc:
                raise EnvironmentFormatError(str(exc), line) from None
        elif tag == "object":
            _check_attrs(tag, attrs, _OBJECT_ATTRS, line)
            pending.append((attrs, line))
        else:
            raise EnvironmentFormatError(f"unexpected element <{tag}>", line)

    obstacles = []
    for attrs, line in pending:
        if attrs["type"] != "cuboid":
            raise EnvironmentFormatError(f"unsupported object type {attrs['type']!r}", line)
        if attrs["material"] not in materials:
            raise EnvironmentFormatError(f"undefined material {attrs['material']!r}", line)
        position = _floats(attrs["position"], 3, "position", line)
        size = _floats(attrs["size"], 3, "size", line)
        if min(size) <= 0:
            raise EnvironmentFormatError(f"size must be positive, got {attrs['size']!r}", line)
        try:
            prism = Prism.box(position, size)
        except InvalidGeometryError as exc:
            raise EnvironmentFormatError(str(exc), line) from None
        obstacles.append(Obstacle(len(obstacles), prism, attrs["material"]))
    return Environment(tuple(obstacles), materials)


def load_environment(path: Union[str, os.PathLike]) -> Environment:
    with open(path, "rb") as fh:
        return parse_environment(fh.read())


def _num(v: float) -> str:
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def dump_environment(env: Environment) -> str:
    """Serialize to the XML format read by :func:`parse_environment`."""
    lines = ["<environment>"]
    for mat in env.materials.values():
        lines.append(
            f'  <material name="{mat.name}" permittivity="{_num(mat.relative_permittivity)}"'
            f' lossTangent="{_num(mat.loss_tangent)}"/>'
        )
    for ob in env.obstacles:
        if ob.type != "cuboid":
            raise ValueError(f"obstacle {ob.id}: only cuboids can be serialized")
        x0, y0, z0, x1, y1, z1 = ob.prism.bounds()
        pos = " ".join(_num(v) for v in (x0, y0, z0))
        size = " ".join(_num(v) for v in (x1 - x0, y1 - y0, ob.prism.height))
        lines.append(
            f'  <object type="cuboid" position="{pos}" size="{size}" material="{ob.material}"/>'
        )
    lines.append("</environment>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalStats:
    links_considered: int = 0
    links_culled: int = 0
    obstacle_tests: int = 0
    intersections_found: int = 0

    def add(self, other: "EvalStats") -> None:
        self.links_considered += other.links_considered
        self.links_culled += other.links_culled
        self.obstacle_tests += other.obstacle_tests
        self.intersections_found += other.intersections_found

    def add_counters(self, counters: np.ndarray) -> None:
        """Add per-worker ``(considered, culled, tests, found)`` rows."""
        for row in np.atleast_2d(counters).tolist():
            self.links_considered += row[0]
            self.links_culled += row[1]
            self.obstacle_tests += row[2]
            self.intersections_found += row[3]


@dataclass(frozen=True)
class WorkerPoolConfig:
    worker_count: int = 1

    def __post_init__(self) -> None:
        if isinstance(self.worker_count, bool) or not isinstance(self.worker_count, (int, np.integer)):
            raise TypeError(f"worker_count must be an integer, got {self.worker_count!r}")
        if self.worker_count < 1:
            raise ValueError(f"worker_count must be >= 1, got {self.worker_count}")


class WorkerPool:
    """Persistent fork-join pool; create once per run, reuse for every beacon."""

    def __init__(self, config: WorkerPoolConfig = WorkerPoolConfig()):
        self.config = config
        self._executor: Optional[ThreadPoolExecutor] = None
        if config.worker_count > 1:
            self._executor = ThreadPoolExecutor(config.worker_count, thread_name_prefix="v2x-eval")

    @property
    def worker_count(self) -> int:
        return self.config.worker_count

    def fork_join(self, fn, blocks: Sequence[tuple[int, int, int]]) -> None:
        if self._executor is None or len(blocks) <= 1:
            for block in blocks:
                fn(*block)
            return
        # the calling thread takes the first block instead of idling on the join
        futures = [self._executor.submit(fn, *block) for block in blocks[1:]]
        fn(*blocks[0])
        for fut in futures:
            fut.result()

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def partition(count: int, workers: int) -> list[tuple[int, int, int]]:
    """Static contiguous blocks ``(worker, lo, hi)``; empty blocks are dropped."""
    edges = [count * w // workers for w in range(workers + 1)]
    return [(w, edges[w], edges[w + 1]) for w in range(workers) if edges[w + 1] > edges[w]]


@njit(nogil=True, cache=True)
def _scan_kernel(ax, ay, az, bx, by, bz, hp, nedges, zlo, zhi, ids, t_in, t_out, chords):
    d = math.sqrt((bx - ax) ** 2 + (by - ay) ** 2 + (bz - az) ** 2)
    n = 0
    for k in range(hp.shape[0]):
        t0, t1 = clip_segment(ax, ay, az, bx, by, bz, hp[k], nedges[k], zlo[k], zhi[k])
        if t0 < t1:
            chord = d * (t1 - t0)
            if chord >= GRAZING_EPS:
                ids[n] = k
                t_in[n] = t0
                t_out[n] = t1
                chords[n] = chord
                n += 1
    return n


# columns of the per-obstacle property table handed to the link kernel
_Z_LO, _Z_HI, _EPS, _TAND, _NEDGES = range(5)
# entries of the radio parameter vector
_FREQ, _EXPONENT, _BUDGET, _BOUNDARY, _SENSITIVITY, _DIELECTRIC = range(6)


@njit(nogil=True, cache=True)
def _link_kernel(tx, rx, lo, hi, hp, props, params, values, flags, counters):
    """Evaluate receivers ``lo..hi``.

    ``values`` rows are distance, pathloss, obstacle loss (dB) and rx power;
    ``flags`` rows are culled and delivered. ``counters`` gets considered,
    culled, obstacle tests and intersections added to it.
    """
    ax = tx[0]
    ay = tx[1]
    az = tx[2]
    frequency = params[_FREQ]
    exponent = params[_EXPONENT]
    budget = params[_BUDGET]
    boundary = params[_BOUNDARY]
    sensitivity = params[_SENSITIVITY]
    dielectric = params[_DIELECTRIC] != 0.0
    m = hp.shape[0]
    considered = 0
    n_culled = 0
    tests = 0
    found = 0
    for i in range(lo, hi):
        bx = rx[i, 0]
        by = rx[i, 1]
        bz = rx[i, 2]
        d = math.sqrt((bx - ax) ** 2 + (by - ay) ** 2 + (bz - az) ** 2)
        considered += 1
        values[0, i] = d
        if d > boundary:
            n_culled += 1
            values[1, i] = np.nan
            values[2, i] = np.nan
            values[3, i] = np.nan
            flags[0, i] = True
            flags[1, i] = False
            continue
        pl = pathloss_core(d, frequency, exponent)
        factor = 1.0
        blocked = False
        for k in range(m):
            tests += 1
            t0, t1 = clip_segment(ax, ay, az, bx, by, bz, hp[k], int(props[k, _NEDGES]),
                                  props[k, _Z_LO], props[k, _Z_HI])
            if t0 < t1:
                chord = d * (t1 - t0)
                if chord >= GRAZING_EPS:
                    found += 1
                    if dielectric:
                        eps = props[k, _EPS]
                        factor *= traversal_factor(eps, props[k, _TAND], frequency, chord) * \
                            fresnel_pair_factor(eps)
                    else:
                        blocked = True
        if blocked:
            factor = 0.0
        values[1, i] = pl
        flags[0, i] = False
        if factor == 0.0:
            values[2, i] = np.inf
            values[3, i] = -np.inf
            flags[1, i] = False
        else:
            loss = -10.0 * math.log10(factor)
            values[2, i] = loss if loss != 0.0 else 0.0
            p = budget - pl + 10.0 * math.log10(factor)
            values[3, i] = p
            flags[1, i] = p >= sensitivity
    counters[0] += considered
    counters[1] += n_culled
    counters[2] += tests
    counters[3] += found


@lru_cache(maxsize=64)
def _radio_params(cfg: RadioConfig, dielectric: bool) -> np.ndarray:
    params = np.array([cfg.carrier_frequency, cfg.pathloss_exponent, cfg.link_budget,
                       cfg.distance_boundary, cfg.rx_sensitivity, 1.0 if dielectric else 0.0])
    params.setflags(write=False)
    return params


def warm_up(env: Environment) -> None:
    """Compile or load the kernel for ``env``'s array types before timing."""
    arr = env.arrays
    _link_kernel(np.zeros(3), np.zeros((1, 3)), 0, 0, arr.halfplanes, arr.props,
                 _radio_params(RadioConfig(), True), np.zeros((4, 1)),
                 np.zeros((2, 1), dtype=np.bool_), np.zeros(4, dtype=np.int64))


class LinkArrays(NamedTuple):
    """Columnar link results for one transmission, indexed like the receivers."""

    distance: np.ndarray
    pathloss: np.ndarray
    obstacle_loss: np.ndarray
    rx_power: np.ndarray
    culled: np.ndarray
    delivered: np.ndarray


def evaluate_arrays(
    env: Environment,
    tx_position: np.ndarray,
    rx_positions: np.ndarray,
    cfg: RadioConfig,
    model: Union[LossModel, str],
    stats: Optional[EvalStats] = None,
    pool: Optional[WorkerPool] = None,
) -> LinkArrays:
    """Evaluate one transmission against ``rx_positions`` (shape ``(r, 3)``).

    With ``pool`` None or single-worker the kernel runs inline on the caller's
    thread; otherwise receivers are split into static blocks.
    """
    arr = env.arrays
    tx = np.ascontiguousarray(tx_position, dtype=np.float64)
    rx = np.ascontiguousarray(rx_positions, dtype=np.float64).reshape(-1, 3)
    r = rx.shape[0]
    values = np.empty((4, r))
    flags = np.empty((2, r), dtype=np.bool_)
    params = _radio_params(cfg, LossModel(model) is LossModel.DIELECTRIC)
    workers = 1 if pool is None else pool.worker_count
    counters = np.zeros((workers, 4), dtype=np.int64)

    if workers == 1:
        _link_kernel(tx, rx, 0, r, arr.halfplanes, arr.props, params, values, flags, counters[0])
    else:
        def run_block(w: int, lo: int, hi: int) -> None:
            _link_kernel(tx, rx, lo, hi, arr.halfplanes, arr.props, params, values, flags,
                         counters[w])

        pool.fork_join(run_block, partition(r, workers))
    if stats is not None:
        stats.add_counters(counters)
    return LinkArrays(values[0], values[1], values[2], values[3], flags[0], flags[1])


def scan_intersections(
    env: Environment, seg: Segment, stats: Optional[EvalStats] = None
) -> list[tuple[Intersection, Material]]:
    """All obstacle chords of ``seg`` in ascending obstacle id."""
    arr = env.arrays
    m = len(env.obstacles)
    ids = np.empty(m, dtype=np.int64)
    t_in, t_out, chords = np.empty(m), np.empty(m), np.empty(m)
    a, b = seg
    n = _scan_kernel(float(a[0]), float(a[1]), float(a[2]), float(b[0]), float(b[1]), float(b[2]),
                     arr.halfplanes, arr.nedges, arr.z_lo, arr.z_hi, ids, t_in, t_out, chords)
    if stats is not None:
        stats.obstacle_tests += m
        stats.intersections_found += n
    return [
        (Intersection(int(ids[i]), float(t_in[i]), float(t_out[i]), float(chords[i])),
         env.material_of(int(ids[i])))
        for i in range(n)
    ]


def to_link_results(tx_id: Any, rx_ids: Sequence[Any], arrays: LinkArrays) -> list[LinkResult]:
    results = []
    for i, rx_id in enumerate(rx_ids):
        culled = bool(arrays.culled[i])
        results.append(LinkResult(
            tx_id=tx_id,
            rx_id=rx_id,
            distance=float(arrays.distance[i]),
            pathloss=None if culled else float(arrays.pathloss[i]),
            obstacle_loss=None if culled else float(arrays.obstacle_loss[i]),
            rx_power=None if culled else float(arrays.rx_power[i]),
            delivered=bool(arrays.delivered[i]),
            culled=culled,
        ))
    return results


def _sorted_receivers(receivers: Iterable[Any]) -> list[Any]:
    return sorted(receivers, key=lambda v: v.id)


def evaluate_links_sequential(
    env: Environment,
    tx: Any,
    receivers: Iterable[Any],
    cfg: RadioConfig,
    model: Union[LossModel, str],
    stats: Optional[EvalStats] = None,
) -> list[LinkResult]:
    """One result per receiver, ordered by receiver id.

    ``tx`` needs ``tx_id`` and ``position``; receivers need ``id`` and
    ``position``.
    """
    rxs = _sorted_receivers(receivers)
    positions = np.array([v.position for v in rxs], dtype=np.float64).reshape(-1, 3)
    arrays = evaluate_arrays(env, np.asarray(tx.position, dtype=np.float64), positions, cfg,
                             model, stats)
    return to_link_results(tx.tx_id, [v.id for v in rxs], arrays)


def evaluate_links_parallel(
    env: Environment,
    tx: Any,
    receivers: Iterable[Any],
    cfg: RadioConfig,
    model: Union[LossModel, str],
    pool: Union[WorkerPoolConfig, WorkerPool],
    stats: Optional[EvalStats] = None,
) -> list[LinkResult]:
    """Same results as :func:`evaluate_links_sequential`, computed by ``pool``.

    Passing a :class:`WorkerPoolConfig` spins up a pool for this call only;
    long runs should pass a live :class:`WorkerPool`.
    """
    rxs = _sorted_receivers(receivers)
    positions = np.array([v.position for v in rxs], dtype=np.float64).reshape(-1, 3)
    tx_pos = np.asarray(tx.position, dtype=np.float64)
    if isinstance(pool, WorkerPoolConfig):
        with WorkerPool(pool) as live:
            arrays = evaluate_arrays(env, tx_pos, positions, cfg, model, stats, live)
    else:
        arrays = evaluate_arrays(env, tx_pos, positions, cfg, model, stats, pool)
    return to_link_results(tx.tx_id, [v.id for v in rxs], arrays)
