"""Exit criteria for the artifact, one test per criterion.

Each test appends a PASS/FAIL/SKIP line that is echoed in the terminal
summary. Timing criteria use median-of-3 wall times of the beacon loop.
"""

import math
import os
import statistics

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import brute_force_hits, log_distance_db, monte_carlo_chord, random_convex_footprint
from v2xprop.bench import OutputPaths, config_from_mapping, emit_reports
from v2xprop.engine import run
from v2xprop.environment import Environment, EvalStats, LossModel, evaluate_links_sequential
from v2xprop.geometry import Prism, Segment, Vec3, segment_prism_intersection
from v2xprop.mobility import GridMobility, Vehicle, generate_grid
from v2xprop.radio_medium import RadioConfig


def verdict(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def hardware_threads():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def median_wall(cfg, env, vehicles, reps=3):
    return statistics.median(run(cfg, env, vehicles, keep_links=False).wall_time for _ in range(reps))


def grid_config(side, n, duration, workers=1, seed=2024, **radio):
    return config_from_mapping({"map_side": side, "vehicle_count": n, "sim_duration": duration,
                                "worker_count": workers, "seed": seed, **radio})


def test_1_sequential_parallel_equivalence(tmp_path):
    blobs = {}
    for workers in (1, 4, 10):
        cfg = grid_config(2000, 100, 10.0, workers)
        env, vehicles = generate_grid(cfg.grid)
        report = run(cfg, env, vehicles)
        paths = emit_reports(report, [], OutputPaths.in_dir(tmp_path / f"w{workers}"))
        blobs[workers] = paths.receptions.read_bytes()
    rows = blobs[1].count(b"\n") - 1
    ok = rows == 100 * 99 * 100 and blobs[1] == blobs[4] == blobs[10]
    verdict(1, "receptions CSV byte-identical for 1/4/10 workers", ok,
            f"{rows} rows, identical={blobs[1] == blobs[4] == blobs[10]}")


def _speed_scenario(workers):
    cfg = grid_config(2300, 100, 10.0, workers, loss_model="dielectric")
    env, vehicles = generate_grid(cfg.grid)
    return cfg, env, vehicles


def test_2_four_workers_speedup():
    threads = hardware_threads()
    if threads < 4:
        line = (f"[SKIP] criterion 2: 4-worker speedup <= 0.85x "
                f"(needs >= 4 hardware threads, found {threads})")
        ACCEPTANCE_LINES.append(line)
        pytest.skip(line)
    t1 = median_wall(*_speed_scenario(1))
    t4 = median_wall(*_speed_scenario(4))
    verdict(2, "2300 m dielectric, 4 workers <= 0.85x sequential", t4 <= 0.85 * t1,
            f"t1={t1:.3f}s t4={t4:.3f}s ratio={t4 / t1:.3f}, {threads} hw threads")


def test_3_ten_workers_beat_sequential():
    t1 = median_wall(*_speed_scenario(1))
    t10 = median_wall(*_speed_scenario(10))
    verdict(3, "2300 m dielectric, 10 workers faster than sequential", t10 < t1,
            f"t1={t1:.3f}s t10={t10:.3f}s ratio={t10 / t1:.3f}, "
            f"{hardware_threads()} hw threads")


def test_4_complexity_law():
    ns = [10, 20, 40, 80]
    walls = []
    counters_ok = True
    for n in ns:
        cfg = grid_config(2300, n, 10.0, distance_boundary=math.inf)
        env, vehicles = generate_grid(cfg.grid)
        reports = [run(cfg, env, vehicles, keep_links=False) for _ in range(3)]
        expected = len(env) * n * (n - 1) * cfg.rounds
        counters_ok &= all(r.stats.obstacle_tests == expected for r in reports)
        counters_ok &= all(r.stats.links_culled == 0 for r in reports)
        walls.append(statistics.median(r.wall_time for r in reports))
    slope = float(np.polyfit(np.log(ns), np.log(walls), 1)[0])
    verdict(4, "obstacle_tests = m*n*(n-1)*rounds and log-log slope 2.0 +/- 0.3",
            counters_ok and abs(slope - 2.0) <= 0.3,
            f"counters exact={counters_ok}, slope={slope:.3f}")


def test_5_boundary_effect():
    culled, tests = [], []
    for side in (1700, 2000, 2300):
        cfg = grid_config(side, 100, 10.0)
        env, vehicles = generate_grid(cfg.grid)
        stats = run(cfg, env, vehicles, keep_links=False).stats
        culled.append(stats.links_culled)
        tests.append(stats.obstacle_tests)
    culled_up = culled[0] < culled[1] < culled[2]
    tests_down = tests[0] > tests[1] > tests[2]
    verdict(5, "links_culled increasing and obstacle_tests decreasing over 1700/2000/2300 m",
            culled_up and tests_down, f"links_culled={culled}, obstacle_tests={tests}")


def test_6_link_budget_golden_value():
    cfg = RadioConfig()
    tx = Vehicle(0, Vec3(100.0, 200.0, 1.5))
    tx_obj = type("Tx", (), {"tx_id": 0, "position": tx.position})
    near = Vehicle(1, Vec3(1100.0, 200.0, 1.5))
    far = Vehicle(2, Vec3(1300.0, 200.0, 1.5))
    stats = EvalStats()
    r_near, r_far = evaluate_links_sequential(Environment(), tx_obj, [near, far], cfg,
                                              LossModel.DIELECTRIC, stats)
    oracle = 25 + 9 + 9 - 3 - log_distance_db(1000.0, 5.9e9, 2.4)
    ok = (abs(r_near.rx_power - (-79.86)) <= 0.01 and abs(r_near.rx_power - oracle) <= 1e-9
          and r_near.delivered and not r_near.culled
          and r_far.culled and not r_far.delivered and r_far.distance == 1200.0)
    verdict(6, "1000 m free path -79.86 dBm delivered, 1200 m culled", ok,
            f"rx={r_near.rx_power:.4f} dBm, oracle={oracle:.4f}, far culled={r_far.culled}")


def _pierce_pair(rng, fp, z0, z1):
    fp_arr = np.asarray(fp)
    centre = fp_arr.mean(axis=0)
    w = rng.dirichlet(np.ones(len(fp)))
    core = centre + 0.5 * (w @ fp_arr - centre)
    p = np.array([*core, z0 + (z1 - z0) * rng.uniform(0.25, 0.75)])
    d = rng.normal(size=3)
    d[2] *= rng.uniform(0.0, 0.5)
    d /= np.linalg.norm(d)
    kind = rng.integers(3)
    if kind == 0:  # both endpoints outside
        return p - rng.uniform(150, 400) * d, p + rng.uniform(150, 400) * d
    if kind == 1:  # one endpoint inside
        return p, p + rng.uniform(1, 400) * d
    return p, p + rng.uniform(0.5, 3.0) * d  # short, usually fully inside


def test_7_geometry_oracle_suite():
    import time

    start = time.perf_counter()
    rng = np.random.default_rng(77)
    worst_mc = worst_sym = worst_scale = 0.0
    for _ in range(1000):
        fp = random_convex_footprint(rng)
        z0 = float(rng.uniform(-5, 5))
        z1 = z0 + float(rng.uniform(3, 40))
        prism = Prism(fp, z0, z1 - z0)
        a, b = _pierce_pair(rng, fp, z0, z1)
        hit = segment_prism_intersection(Segment(tuple(a), tuple(b)), prism)
        mc, _ = monte_carlo_chord(a, b, fp, z0, z1, 200_000, rng)
        worst_mc = max(worst_mc, abs(hit.chord_length - mc) / hit.chord_length)
        back = segment_prism_intersection(Segment(tuple(b), tuple(a)), prism)
        worst_sym = max(worst_sym, abs(back.chord_length - hit.chord_length) / hit.chord_length)
        s = float(rng.uniform(0.1, 50))
        scaled = Prism(tuple((x * s, y * s) for x, y in fp), z0 * s, (z1 - z0) * s)
        hs = segment_prism_intersection(Segment(tuple(a * s), tuple(b * s)), scaled)
        worst_scale = max(worst_scale, abs(hs.chord_length - s * hit.chord_length) / (s * hit.chord_length))
    elapsed = time.perf_counter() - start
    ok = worst_mc <= 1e-3 and worst_sym <= 1e-9 and worst_scale <= 1e-9 and elapsed < 30
    verdict(7, "1000 random prism/segment pairs vs Monte-Carlo, symmetry, scaling", ok,
            f"max rel err mc={worst_mc:.2e} sym={worst_sym:.2e} scale={worst_scale:.2e}, "
            f"{elapsed:.1f}s")


def test_8_ideal_model_blocking():
    cfg = grid_config(800, 25, 0.1, loss_model="ideal")
    env, vehicles = generate_grid(cfg.grid)
    report = run(cfg, env, vehicles)
    mob = GridMobility(vehicles, (0, 0, 800, 800))
    _, pos = mob.positions_at(0.0)
    crossing = violations = 0
    for r in report.link_results():
        hits = brute_force_hits(env, pos[r.tx_id], pos[r.rx_id])
        if hits:
            crossing += 1
            violations += r.delivered
    ok = violations == 0 and crossing > 0 and len(report.links) == 25 * 24
    verdict(8, "ideal model: every building-crossing link undelivered", ok,
            f"{crossing} crossing links of {len(report.links)}, {violations} delivered")
