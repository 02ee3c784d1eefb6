"""Fixed-step kinematic world: ego bicycle model plus scripted NPCs."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from cri.control import ControlCommand
from cri.geometry import EgoState, ObjectState, wrap_angle
from cri.sim.collision import Box, boxes_overlap
from cri.sim.scenario import NpcScript, Scenario


@dataclass(frozen=True)
class SimParams:
    dt: float = 0.05
    a_max: float = 3.5
    a_brake: float = 8.0
    max_steer: float = 0.6  # rad at |steer| == 1
    collision_policy: str = "continue"

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError("dt must be > 0")
        if not (self.a_max > 0.0 and self.a_brake > 0.0):
            raise ValueError("a_max and a_brake must be > 0")
        if not 0.0 < self.max_steer < math.pi / 2:
            raise ValueError("max_steer must lie in (0, pi/2)")
        if self.collision_policy not in ("continue", "stop"):
            raise ValueError("collision_policy must be 'continue' or 'stop'")


class Polyline:
    def __init__(self, points):
        self.points = np.asarray(points, dtype=float)
        seg = np.diff(self.points, axis=0)
        self.seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self.seg_dir = seg / self.seg_len[:, None]
        self.cum = np.concatenate(([0.0], np.cumsum(self.seg_len)))
        self._cum_list = self.cum.tolist()
        self.length = float(self.cum[-1])

    def segment_at(self, s: float) -> int:
        i = bisect.bisect_right(self._cum_list, s) - 1
        return min(max(i, 0), len(self.seg_len) - 1)

    def pose_at(self, s: float) -> tuple[float, float, float]:
        """Point and tangent heading at arc length ``s`` (clamped to the ends)."""
        s = min(max(s, 0.0), self.length)
        i = self.segment_at(s)
        ux, uy = self.seg_dir[i]
        p = self.points[i] + self.seg_dir[i] * (s - self.cum[i])
        return float(p[0]), float(p[1]), math.atan2(uy, ux)

    def project(self, x: float, y: float) -> tuple[float, float]:
        """Arc length of the closest point and the distance to it."""
        rel = np.array([x, y]) - self.points[:-1]
        t = np.clip(np.einsum("ij,ij->i", rel, self.seg_dir), 0.0, self.seg_len)
        closest = self.points[:-1] + self.seg_dir * t[:, None]
        d = np.hypot(closest[:, 0] - x, closest[:, 1] - y)
        i = int(np.argmin(d))
        return float(self.cum[i] + t[i]), float(d[i])


@dataclass
class NpcAgent:
    script: NpcScript
    path: Polyline
    stops: list[tuple[float, float]]  # (arc length, wait) still ahead
    s: float = 0.0
    speed: float = 0.0
    spawned: bool = False
    finished: bool = False
    wait_left: float | None = None

    @classmethod
    def from_script(cls, script: NpcScript) -> "NpcAgent":
        path = Polyline(script.waypoints)
        stops = [] if script.violates_stops else sorted((path.project(p.x, p.y)[0], p.wait) for p in script.stops)
        return cls(script=script, path=path, stops=stops, speed=script.speeds[0])

    @property
    def active(self) -> bool:
        return self.spawned and not self.finished

    def target_speed(self) -> float:
        v = self.script.speeds[self.path.segment_at(self.s)]
        if self.stops:
            gap = max(0.0, self.stops[0][0] - self.s)
            v = min(v, math.sqrt(2.0 * self.script.accel_limit * gap))
        return v

    def advance(self, t: float, dt: float) -> None:
        if self.finished:
            return
        if not self.spawned:
            if t + 1e-12 < self.script.spawn_time:
                return
            self.spawned = True
            return
        if self.wait_left is not None:
            self.wait_left -= dt
            if self.wait_left <= 1e-12:
                self.wait_left = None
                self.stops.pop(0)
            return
        target = self.target_speed()
        dv = self.script.accel_limit * dt
        self.speed = min(self.speed + dv, max(self.speed - dv, target))
        self.s += self.speed * dt
        if self.stops and self.s >= self.stops[0][0] - 0.5 and self.speed <= 0.5:
            self.s = min(self.s, self.stops[0][0])
            self.speed = 0.0
            self.wait_left = self.stops[0][1]
        if self.s >= self.path.length:
            if self.script.on_end == "despawn":
                self.finished = True
            else:
                self.s = self.path.length
                self.speed = 0.0

    def object_state(self) -> ObjectState:
        x, y, heading = self.path.pose_at(self.s)
        return ObjectState(
            id=self.script.id,
            x=x,
            y=y,
            vx=self.speed * math.cos(heading),
            vy=self.speed * math.sin(heading),
            heading=heading,
            half_length=self.script.half_length,
            half_width=self.script.half_width,
        )

    def box(self) -> Box:
        x, y, heading = self.path.pose_at(self.s)
        return Box(x, y, heading, self.script.half_length, self.script.half_width)


@dataclass
class Ego:
    x: float
    y: float
    yaw: float
    speed: float
    half_length: float = 2.4
    half_width: float = 1.0
    wheelbase: float = 2.8
    accel: float = 0.0
    odometer: float = 0.0

    def state(self) -> EgoState:
        return EgoState(
            x=self.x,
            y=self.y,
            heading=self.yaw,
            speed=self.speed,
            acceleration=self.accel,
            half_length=self.half_length,
            half_width=self.half_width,
            wheelbase=self.wheelbase,
        )

    def box(self) -> Box:
        return Box(self.x, self.y, self.yaw, self.half_length, self.half_width)


@dataclass
class CollisionEvent:
    t: float
    npc_id: str


@dataclass
class World:
    t: float
    ego: Ego
    npcs: list[NpcAgent]
    route: Polyline
    progress: float = 0.0
    contacts: set = field(default_factory=set)

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "World":
        route = Polyline(scenario.route)
        x, y, yaw = route.pose_at(0.0)
        e = scenario.ego
        ego = Ego(x, y, yaw, e.speed, e.half_length, e.half_width, e.wheelbase)
        npcs = [NpcAgent.from_script(s) for s in scenario.npcs]
        world = cls(t=0.0, ego=ego, npcs=npcs, route=route)
        for npc in world.npcs:
            npc.advance(0.0, 0.0)
        return world

    def objects(self) -> list[ObjectState]:
        return [npc.object_state() for npc in self.npcs if npc.active]


def step_world(world: World, command: ControlCommand, dt: float, params: SimParams = SimParams()) -> World:
    """Advance ``world`` by one tick in place and return it."""
    ego = world.ego
    a_cmd = command.throttle * params.a_max - command.brake * params.a_brake
    delta = command.steer * params.max_steer
    v0 = ego.speed
    ego.x += v0 * math.cos(ego.yaw) * dt
    ego.y += v0 * math.sin(ego.yaw) * dt
    ego.yaw = wrap_angle(ego.yaw + v0 / ego.wheelbase * math.tan(delta) * dt)
    ego.speed = max(0.0, v0 + a_cmd * dt)
    ego.accel = (ego.speed - v0) / dt
    ego.odometer += v0 * dt
    world.progress = world.route.project(ego.x, ego.y)[0]

    world.t += dt
    for npc in world.npcs:
        npc.advance(world.t, dt)
    return world


def detect_collisions(world: World) -> list[CollisionEvent]:
    """Report ego-NPC contacts that started on this tick."""
    ego_box = world.ego.box()
    touching = set()
    for npc in world.npcs:
        if npc.active and boxes_overlap(ego_box, npc.box()):
            touching.add(npc.script.id)
    new = sorted(touching - world.contacts)
    world.contacts = touching
    return [CollisionEvent(world.t, nid) for nid in new]
