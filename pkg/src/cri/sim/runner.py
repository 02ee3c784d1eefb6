"""Closed-loop scenario execution and per-tick trace records."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from cri.control import ControllerParams, ControllerState, DrivingMode, decision_cycle
from cri.geometry import RoadContext
from cri.risk import RiskParams
from cri.sectors import SectorField
from cri.sim.baseline import BaselineController, BaselineParams
from cri.sim.scenario import Scenario
from cri.sim.world import CollisionEvent, SimParams, World, detect_collisions, step_world

TIMING_KEY = "timing_us"


@dataclass
class TickTrace:
    t: float
    x: float
    y: float
    yaw: float
    speed: float
    accel: float
    R: list[float]
    cri_final: float
    cri_final_raw: float
    dominant_sector: int
    mode: str
    throttle: float
    brake: float
    steer: float
    collisions: list[str]
    failsafe: bool = False
    timing_us: dict = field(default_factory=dict)

    def to_record(self, with_timing: bool = True) -> dict:
        rec = {
            "t": round(self.t, 9),
            "x": self.x,
            "y": self.y,
            "yaw": self.yaw,
            "speed": self.speed,
            "accel": self.accel,
            "R": self.R,
            "cri_final": self.cri_final,
            "cri_final_raw": self.cri_final_raw,
            "dominant_sector": self.dominant_sector,
            "mode": self.mode,
            "throttle": self.throttle,
            "brake": self.brake,
            "steer": self.steer,
            "collisions": self.collisions,
            "failsafe": self.failsafe,
        }
        if with_timing:
            rec[TIMING_KEY] = self.timing_us
        return rec


@dataclass
class Outcome:
    status: str  # completed | timeout | collided
    collisions: int
    distance_km: float
    completion: float
    ticks: int
    events: list[CollisionEvent] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "collisions": self.collisions,
            "distance_km": self.distance_km,
            "completion": self.completion,
            "ticks": self.ticks,
            "events": [{"t": round(e.t, 9), "npc": e.npc_id} for e in self.events],
        }


@dataclass
class RunResult:
    scenario: str
    cri_enabled: bool
    trace: list[TickTrace]
    outcome: Outcome


@dataclass(frozen=True)
class RunParams:
    risk: RiskParams = field(default_factory=RiskParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    sim: SimParams = field(default_factory=SimParams)
    baseline: BaselineParams = field(default_factory=BaselineParams)


def run_scenario(scenario: Scenario, cri_enabled: bool, params: RunParams = RunParams(),
                 monitor: bool = False) -> RunResult:
    """Run one scenario to completion, timeout or (optionally) first collision.

    ``monitor`` computes the risk field for the trace without applying it
    to the command; it has no effect when ``cri_enabled`` is set.
    """
    dt = scenario.dt if scenario.dt is not None else params.sim.dt
    world = World.from_scenario(scenario)
    road = RoadContext(v_limit=scenario.speed_limit, lanes=scenario.lanes, lane_width=scenario.lane_width)
    baseline = BaselineController(scenario, world, params.baseline, params.sim)
    state = ControllerState(params=params.controller)
    compute_risk = cri_enabled or monitor
    clock = time.perf_counter_ns

    trace: list[TickTrace] = []
    events: list[CollisionEvent] = []
    n_ticks = int(round(scenario.duration_limit / dt))
    status = "timeout"
    for k in range(n_ticks):
        t0 = clock()
        base_cmd = baseline.command(world, dt)
        t1 = clock()
        if baseline.route_complete:
            status = "completed"
            break
        timing = {"baseline": (t1 - t0) / 1e3}
        command, sf, mode, failed = base_cmd, SectorField(), DrivingMode.AGGRESSIVE.label, False
        if compute_risk:
            adapted, sf, diag = decision_cycle(
                world.ego.state(), world.objects(), road, params.risk, state, base_cmd
            )
            t2 = clock()
            timing["cri"] = (t2 - t1) / 1e3
            timing.update({f"cri_{k_}": v for k_, v in diag.timings_us.items() if k_ != "total"})
            failed = diag.failed
            if cri_enabled:
                command = adapted
                mode = diag.mode.label
        timing["step"] = sum(v for key, v in timing.items() if key in ("baseline", "cri"))

        step_world(world, command, dt, params.sim)
        world.t = (k + 1) * dt  # no accumulated float drift
        new = detect_collisions(world)
        events.extend(new)
        ego = world.ego
        trace.append(
            TickTrace(
                t=world.t,
                x=ego.x,
                y=ego.y,
                yaw=ego.yaw,
                speed=ego.speed,
                accel=ego.accel,
                R=[float(r) for r in sf.R],
                cri_final=sf.cri_final,
                cri_final_raw=sf.cri_final_raw,
                dominant_sector=sf.dominant_sector,
                mode=mode,
                throttle=command.throttle,
                brake=command.brake,
                steer=command.steer,
                collisions=[e.npc_id for e in new],
                failsafe=failed,
                timing_us=timing,
            )
        )
        if new and params.sim.collision_policy == "stop":
            status = "collided"
            break

    length = world.route.length
    return RunResult(
        scenario=scenario.name,
        cri_enabled=cri_enabled,
        trace=trace,
        outcome=Outcome(
            status=status,
            collisions=len(events),
            distance_km=world.ego.odometer / 1000.0,
            completion=1.0 if status == "completed" else min(1.0, world.progress / length),
            ticks=len(trace),
            events=events,
        ),
    )


def trace_lines(trace: Iterable[TickTrace], with_timing: bool = True) -> Iterable[str]:
    for tick in trace:
        yield json.dumps(tick.to_record(with_timing), separators=(",", ":"))


def write_trace(trace: Iterable[TickTrace], path: str | Path, with_timing: bool = True) -> None:
    with open(path, "w") as fh:
        for line in trace_lines(trace, with_timing):
            fh.write(line + "\n")


def read_trace(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
