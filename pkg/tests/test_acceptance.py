"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line; ``conftest.py`` prints them in the
terminal summary so they appear even without ``-s``.
"""

import math
import statistics
import time

import numpy as np
import pytest

from cri.cli import main
from cri.control import (
    ControlCommand,
    ControllerState,
    DrivingMode,
    adapt_control,
    decision_cycle,
)
from cri.geometry import EgoState, ObjectState, RoadContext, rss_distance
from cri.metrics import COMPONENT_ROWS, RuntimeReport, runtime_profile
from cri.risk import (
    RiskFactors,
    RiskParams,
    assess_batch,
    directional_risk,
    fuse_spatial,
    object_cri,
    orientation_risk,
    speed_risk,
)
from cri.sectors import N_SECTORS, SectorField, aggregate_arrays, fuse
from cri.sim import resolve_scenario, run_scenario
from cri.sim.collision import boxes_overlap
from cri.sim.scenario import builtin_dir, scenario_files
from oracle.box_sampling import oracle_overlap, random_pairs

RESULTS: list[str] = []


def check(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# frozen from tests/oracle/straight_line.py (40-digit mpmath)
ORACLE = {
    "orientation_0": 0.024471741852423213942,
    "orientation_91_125": 1.0,
    "directional_10_m5": 0.13533533737072598654,
    "speed_10_10_2": 0.73105857863000487925,
    "noisy_or_half": 0.875,
    "cri_example": 0.58269336481105148466,
    "rss_20_15": 41.4453125,
}


def test_criterion_1_formula_oracles():
    from oracle.straight_line import values

    live = {k: float(v) for k, v in values().items()}
    frozen_ok = all(live[k] == pytest.approx(v, rel=1e-15) for k, v in ORACLE.items())

    f_speed = speed_risk(10.0, RoadContext(v_limit=10.0, lanes=2))
    got = {
        "orientation_0": orientation_risk(0.0),
        "orientation_91_125": orientation_risk(91.125),
        "directional_10_m5": directional_risk(10.0, -5.0)[0],
        "speed_10_10_2": f_speed,
        "noisy_or_half": fuse_spatial(0.5, 0.5, 0.5),
        "cri_example": object_cri(RiskFactors(0.5, 0.5, 0.5, f_speed, fuse_spatial(0.5, 0.5, 0.5))),
        "rss_20_15": rss_distance(20.0, 15.0),
    }
    bad = [k for k, v in got.items() if not math.isclose(v, ORACLE[k], rel_tol=1e-9)]
    # the closed form e^-2 holds exactly once the division guard is removed
    e2_ok = math.isclose(directional_risk(10.0, -5.0, epsilon=0.0)[0], math.exp(-2.0), rel_tol=1e-9)
    check(1, frozen_ok and not bad and e2_ok,
          f"{len(got) - len(bad)}/{len(got)} oracle values within 1e-9 relative, e^-2 exact={e2_ok}")


def test_criterion_2_bounds():
    rng = np.random.default_rng(2)
    n_chunks, per_chunk = 1000, 100
    violations = 0
    for _ in range(n_chunks):
        dp_lon = rng.uniform(-60.0, 60.0, per_chunk)
        dp_lat = rng.uniform(-20.0, 20.0, per_chunk)
        v_lon = rng.uniform(-30.0, 30.0, per_chunk)
        v_lat = rng.uniform(-10.0, 10.0, per_chunk)
        # exercise the zero-velocity and zero-offset edges as well
        v_lon[rng.random(per_chunk) < 0.05] = 0.0
        dp_lat[rng.random(per_chunk) < 0.05] = 0.0
        theta = rng.uniform(0.0, 200.0, per_chunk)
        road = RoadContext(v_limit=float(rng.uniform(1.0, 40.0)), lanes=int(rng.integers(1, 7)))
        params = RiskParams(alpha=float(rng.uniform()), beta=float(rng.uniform()),
                            speed_ref=float(rng.uniform(0.0, 1.0)))
        t = assess_batch(range(per_chunk), dp_lon, dp_lat, v_lon, v_lat, theta,
                         float(rng.uniform(0.0, 60.0)), road, params)
        factors = np.stack([t.f_orientation, t.f_lon, t.f_lat, t.f_spatial, t.cri])
        violations += int(np.count_nonzero((factors < 0.0) | (factors > 1.0)))
        violations += int(not 0.0 <= t.f_speed <= 1.0)
        f_max = np.maximum(np.maximum(t.f_orientation, t.f_lon), t.f_lat)
        violations += int(np.count_nonzero(t.f_spatial < f_max - 1e-15))
        violations += int(np.count_nonzero(t.f_lon[dp_lon * v_lon >= 0.0] != 0.0))
        violations += int(np.count_nonzero(t.f_lat[dp_lat * v_lat >= 0.0] != 0.0))
        sf = fuse(aggregate_arrays(t.bearing, t.cri), params.beta)
        violations += int(not 0.0 <= sf.cri_final <= 1.0)
    check(2, violations == 0, f"{n_chunks * per_chunk} random states, {violations} bound violations")


def test_criterion_3_sector_properties():
    rng = np.random.default_rng(3)
    n = 10_000
    violations = 0
    for _ in range(n):
        k = int(rng.integers(1, 30))
        bearings = rng.uniform(-math.pi, math.pi, k)
        cri = rng.uniform(0.0, 1.0, k)
        perm = rng.permutation(k)
        a = aggregate_arrays(bearings, cri)
        b = aggregate_arrays(bearings[perm], cri[perm])
        violations += int(not np.array_equal(a.R, b.R))

        R = rng.uniform(0.0, 1.0, N_SECTORS) * (rng.random(N_SECTORS) < 0.6)
        beta = float(rng.uniform())
        base = fuse(SectorField(R=R), beta)
        shift = int(rng.integers(1, N_SECTORS))
        rot = fuse(SectorField(R=np.roll(R, shift)), beta)
        violations += int(abs(rot.r_vector - base.r_vector) > 1e-12 or abs(rot.cri_final - base.cri_final) > 1e-12)
        if R.max() > 0.0:
            violations += int(rot.dominant_sector != (base.dominant_sector + shift) % N_SECTORS)

        half = rng.uniform(0.0, 1.0, N_SECTORS // 2)
        violations += int(fuse(SectorField(R=np.concatenate([half, half])), beta).r_vector > 1e-12)

        one = np.zeros(N_SECTORS)
        d, v = int(rng.integers(0, N_SECTORS)), float(rng.uniform())
        one[d] = v
        single = fuse(SectorField(R=one), beta)
        violations += int(abs(single.cri_final - v) > 1e-12 or single.r_max != v)
    check(3, violations == 0, f"{n} random fields, {violations} property violations")


def test_criterion_4_safety_monotonicity():
    rng = np.random.default_rng(4)
    n = 10_000
    violations = 0
    for _ in range(n):
        throttle, brake = (float(x) for x in rng.uniform(0.0, 1.0, 2))
        base = ControlCommand(throttle, brake, float(rng.uniform(-1.0, 1.0)))
        R = rng.uniform(0.0, 1.0, N_SECTORS) * (rng.random(N_SECTORS) < 0.5)
        sf = fuse(SectorField(R=R))
        for mode in DrivingMode:
            out = adapt_control(base, mode, sf)
            violations += int(out.throttle > base.throttle or out.brake < base.brake)
    check(4, violations == 0, f"{n} command/field pairs x {len(DrivingMode)} modes, {violations} violations")


def test_criterion_5_golden_scenario():
    sc = resolve_scenario("intersection_stop_violation")
    t0 = time.perf_counter()
    base = run_scenario(sc, False)
    cri = run_scenario(sc, True)
    elapsed = time.perf_counter() - t0
    dt = base.trace[1].t - base.trace[0].t

    ok = base.outcome.collisions >= 1 and cri.outcome.collisions == 0 and elapsed < 5.0
    lead = None
    if base.outcome.events:
        hit_tick = round(base.outcome.events[0].t / dt)
        peak = next((round(tk.t / dt) for tk in cri.trace if tk.cri_final >= 0.6), None)
        lead = None if peak is None else hit_tick - peak
    ok = ok and lead is not None and lead >= 5
    check(5, ok, f"baseline collisions={base.outcome.collisions}, CRI collisions={cri.outcome.collisions}, "
                 f"cri_final>=0.6 lead={lead} ticks, runtime={elapsed:.2f}s")


@pytest.fixture(scope="module")
def corpus_batches(tmp_path_factory):
    d = tmp_path_factory.mktemp("batch")
    outs = []
    for i in (1, 2):
        text, doc = d / f"report{i}.txt", d / f"report{i}.json"
        assert main(["batch", str(builtin_dir()), "--no-runtime", "--out", str(text), "--json", str(doc)]) == 0
        outs.append((text, doc))
    return outs


def test_criterion_6_corpus_claims(corpus_batches):
    import json

    doc = json.loads(corpus_batches[0][1].read_text())
    suites = {s["label"]: s for s in doc["suites"]}
    n = len(doc["scenarios"])
    b_all, c_all = suites["Baseline_ALL"], suites["CRI_ALL"]
    b_fp, c_fp = suites["Baseline_FP"], suites["CRI_FP"]
    reduction = 100.0 * (b_fp["CpK"] - c_fp["CpK"]) / b_fp["CpK"]
    ok = (n >= 20 and c_all["CpK"] < b_all["CpK"] and reduction >= 10.0 and c_fp["SAJ"] <= b_fp["SAJ"])
    check(6, ok, f"{n} scenarios, CpK all {b_all['CpK']:.2f}->{c_all['CpK']:.2f}, "
                 f"FP CpK reduction {reduction:.1f}%, FP SAJ {b_fp['SAJ']:.2f}->{c_fp['SAJ']:.2f}")


def _dense_scene(n_objects: int = 64):
    rng = np.random.default_rng(7)
    ego = EgoState(x=0.0, y=0.0, heading=0.0, speed=10.0)
    objs = [
        ObjectState(id=f"o{i}", x=float(rng.uniform(-4.0, 12.0)), y=float(rng.uniform(-4.0, 4.0)),
                    vx=float(rng.uniform(-5.0, 5.0)), vy=float(rng.uniform(-5.0, 5.0)),
                    heading=float(rng.uniform(-3.0, 3.0)), half_length=2.4, half_width=1.0)
        for i in range(n_objects)
    ]
    return ego, objs, RoadContext(v_limit=10.0, lanes=2)


def test_criterion_7_runtime_budget():
    ego, objs, road = _dense_scene()
    params, state, base = RiskParams(), ControllerState(), ControlCommand(0.3, 0.0, 0.0)
    for _ in range(200):  # warm-up
        decision_cycle(ego, objs, road, params, state, base)
    samples, parts = [], {key: [] for key, _ in COMPONENT_ROWS}
    for _ in range(3000):
        t0 = time.perf_counter_ns()
        _, _, diag = decision_cycle(ego, objs, road, params, state, base)
        samples.append((time.perf_counter_ns() - t0) / 1e6)
        for key, _ in COMPONENT_ROWS:
            parts[key].append(diag.timings_us[key.removeprefix("cri_")])
    median, p99 = statistics.median(samples), float(np.percentile(samples, 99))

    golden = resolve_scenario("intersection_stop_violation")
    steps = runtime_profile([(run_scenario(golden, False), run_scenario(golden, True))])
    report = RuntimeReport({label: statistics.fmean(parts[key]) / 1e3 for key, label in COMPONENT_ROWS},
                           steps.baseline_ms, steps.cri_ms)
    print(f"\n64-object decision cycle, {len(samples)} samples\n{report.to_text()}")

    ok = diag.n_candidates == len(objs) and median <= 0.5 and p99 <= 3.6
    check(7, ok, f"{diag.n_candidates} objects in envelope, median {median:.3f} ms, p99 {p99:.3f} ms")


def test_criterion_8_determinism(corpus_batches):
    (a, _), (b, _) = corpus_batches
    same = a.read_bytes() == b.read_bytes()
    n = len(scenario_files(builtin_dir()))
    check(8, same, f"two batch runs over {n} scenarios byte-identical={same}")


def test_criterion_9_sat_oracle():
    pairs = random_pairs(1000, margin=0.01, seed=9)
    bad = sum(boxes_overlap(a, b) != oracle_overlap(a, b) for a, b in pairs)
    hits = sum(boxes_overlap(a, b) for a, b in pairs)
    check(9, bad == 0, f"{len(pairs)} box pairs ({hits} overlapping), {bad} disagreements with sampling oracle")
