"""Scripted stand-in for a learned driving policy.

Pure-pursuit steering along the route, proportional speed tracking, stop
handling at stop triggers and a short fixed-headway reaction to in-path
leaders.  The headway is deliberately short so that some scenarios fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from cri.control import ControlCommand
from cri.sim.scenario import Scenario
from cri.sim.world import SimParams, World


@dataclass(frozen=True)
class BaselineParams:
    lookahead_min: float = 4.0
    lookahead_gain: float = 0.6  # s
    k_throttle: float = 0.5  # per m/s of speed error
    k_brake: float = 0.4
    comfort_decel: float = 2.5
    stop_tolerance: float = 1.5
    stop_speed: float = 0.3
    headway: float = 6.0  # bumper-to-bumper gap that triggers full braking
    completion_margin: float = 1.0

    def __post_init__(self) -> None:
        for name in ("lookahead_min", "k_throttle", "k_brake", "comfort_decel", "headway"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")


class BaselineController:
    def __init__(self, scenario: Scenario, world: World, params: BaselineParams = BaselineParams(),
                 sim: SimParams = SimParams()):
        self.params = params
        self.sim = sim
        self.lane_width = scenario.lane_width
        self.cruise = min(scenario.speed_limit, scenario.ego.cruise_speed or scenario.speed_limit)
        self.route = world.route
        # (arc length where the front bumper should stop, wait time)
        self.stops = sorted(
            (world.route.project(p.x, p.y)[0] - scenario.ego.half_length, p.wait)
            for p in scenario.stop_triggers
        )
        self.waited = 0.0
        self.route_complete = False

    def _steer(self, world: World) -> float:
        ego = world.ego
        p = self.params
        lookahead = max(p.lookahead_min, p.lookahead_gain * ego.speed)
        tx, ty, _ = self.route.pose_at(world.progress + lookahead)
        dx, dy = tx - ego.x, ty - ego.y
        alpha = math.atan2(dy, dx) - ego.yaw
        alpha = math.atan2(math.sin(alpha), math.cos(alpha))
        ld = max(math.hypot(dx, dy), 1e-6)
        delta = math.atan2(2.0 * ego.wheelbase * math.sin(alpha), ld)
        return max(-1.0, min(1.0, delta / self.sim.max_steer))

    def _leader_gap(self, world: World) -> float:
        ego = world.ego
        c, s = math.cos(ego.yaw), math.sin(ego.yaw)
        best = math.inf
        for npc in world.npcs:
            if not npc.active:
                continue
            x, y, _ = npc.path.pose_at(npc.s)
            lon = c * (x - ego.x) + s * (y - ego.y)
            lat = -s * (x - ego.x) + c * (y - ego.y)
            if lon > 0.0 and abs(lat) <= 0.5 * self.lane_width:
                best = min(best, lon - ego.half_length - npc.script.half_length)
        return best

    def target_speed(self, world: World, dt: float) -> float:
        p = self.params
        v = self.cruise
        if self.stops:
            s_stop, wait = self.stops[0]
            gap = s_stop - world.progress
            if gap <= p.stop_tolerance and world.ego.speed <= p.stop_speed:
                self.waited += dt
                if self.waited >= wait:
                    self.stops.pop(0)
                    self.waited = 0.0
                else:
                    return 0.0
            else:
                v = min(v, math.sqrt(2.0 * p.comfort_decel * max(0.0, gap)))
        return v

    def command(self, world: World, dt: float) -> ControlCommand:
        p = self.params
        if world.progress >= self.route.length - p.completion_margin:
            self.route_complete = True
            return ControlCommand()
        steer = self._steer(world)
        if self._leader_gap(world) < p.headway:
            return ControlCommand(throttle=0.0, brake=1.0, steer=steer)
        err = self.target_speed(world, dt) - world.ego.speed
        if err >= 0.0:
            return ControlCommand(throttle=min(1.0, p.k_throttle * err), brake=0.0, steer=steer)
        return ControlCommand(throttle=0.0, brake=min(1.0, p.k_brake * -err), steer=steer)


def baseline_controller(world: World, scenario: Scenario, controller: BaselineController | None = None,
                        dt: float = 0.05) -> ControlCommand:
    """Functional entry point; builds a fresh controller when none is given."""
    controller = controller or BaselineController(scenario, world)
    return controller.command(world, dt)
