"""Parallel V2X beacon propagation with obstacle shadowing and distance culling."""

__version__ = "0.1.0"

from .geometry import Intersection, InvalidGeometryError, Prism, Segment, Vec3, distance, segment_prism_intersection
from .obstacle_loss import LossFactor, Material, dielectric_loss, dielectric_traversal_factor, ideal_loss, reflection_factor
from .radio_medium import LinkResult, RadioConfig, cull_by_boundary, pathloss_db, received_power_dbm
from .environment import (
    Environment,
    EnvironmentFormatError,
    EvalStats,
    LossModel,
    WorkerPool,
    WorkerPoolConfig,
    dump_environment,
    evaluate_links_parallel,
    evaluate_links_sequential,
    load_environment,
    parse_environment,
    scan_intersections,
)
from .mobility import GridMobility, GridSpec, Trace, Vehicle, generate_grid, load_trace, step_positions
from .engine import RunReport, SimConfig, Transmission, run

__all__ = [
    "__version__",
    "Intersection",
    "InvalidGeometryError",
    "Prism",
    "Segment",
    "Vec3",
    "distance",
    "segment_prism_intersection",
    "LossFactor",
    "Material",
    "dielectric_loss",
    "dielectric_traversal_factor",
    "ideal_loss",
    "reflection_factor",
    "LinkResult",
    "RadioConfig",
    "cull_by_boundary",
    "pathloss_db",
    "received_power_dbm",
    "Environment",
    "EnvironmentFormatError",
    "EvalStats",
    "LossModel",
    "WorkerPool",
    "WorkerPoolConfig",
    "dump_environment",
    "evaluate_links_parallel",
    "evaluate_links_sequential",
    "load_environment",
    "parse_environment",
    "scan_intersections",
    "GridMobility",
    "GridSpec",
    "Trace",
    "Vehicle",
    "generate_grid",
    "load_trace",
    "step_positions",
    "RunReport",
    "SimConfig",
    "Transmission",
    "run",
]
