"""
==========================================
Scaling with vehicles, map size and workers
==========================================

Two benchmark sweeps over the grid scenario. The first grows the vehicle
count and shows the quadratic cost of all-pairs link evaluation. The second
grows the map while the distance boundary stays at 1000 m, so more and more
links get culled. Sweep definitions live in ``configs/`` and the same files
work with ``v2xprop --sweep``.
"""

# %%
# Loading a sweep
# ---------------
# A sweep file names a base config, the variable to vary, its values and the
# worker counts to try. Everything else overrides the base.
from pathlib import Path

import numpy as np

from v2xprop.bench import SweepSpec, load_sweep, run_sweep

here = Path(__file__).resolve().parent if "__file__" in globals() else Path("demos")
spec = load_sweep(here / "configs" / "vehicles_sweep.conf")
# trimmed so the walkthrough finishes in seconds
spec = SweepSpec("vehicles", (10, 20, 40, 80), repetitions=2, threads=(1,),
                 scenario="vehicles", base=spec.base)

# %%
# Vehicles
# --------
# Each record holds the wall time of the beacon loop and the work counters.
# Obstacle tests follow m*n*(n-1) per round for the non-culled links, and
# the log-log slope of the time heads towards 2 as n grows. With this short
# run the fixed per-transmission cost still pulls it a little lower.
records = run_sweep(spec)
n = np.array([r.vehicle_count for r in records], dtype=float)
t = np.array([r.wall_time_s for r in records])
for r in records[::spec.repetitions]:
    print(f"n={r.vehicle_count:3d}  tests={r.obstacle_tests:>10d}  t={r.wall_time_s:.3f}s")
slope = np.polyfit(np.log(n), np.log(t), 1)[0]
print(f"log-log slope of wall time vs n: {slope:.2f}")

# %%
# Map side
# --------
# With more area, a bigger share of vehicle pairs lies beyond the boundary
# and is culled before any geometry runs. The building count grows with the
# area too, which is why the obstacle tests do not shrink here.
map_spec = load_sweep(here / "configs" / "map_sweep.conf")
map_spec = SweepSpec("map_side", (1000.0, 1700.0, 2300.0), repetitions=1, threads=(1,),
                     scenario="map", base=map_spec.base)
for r in run_sweep(map_spec):
    share = r.links_culled / r.links_considered
    print(f"side={r.map_side:6.0f} m  culled={share:5.1%}  tests={r.obstacle_tests:>10d}"
          f"  t={r.wall_time_s:.3f}s")
