"""Ego-frame kinematics, RSS distance and the dynamic safety envelope.

Frame convention used throughout the package: world and body frames are
right-handed, x forward / y left, yaw measured counter-clockwise.  A positive
bearing therefore points to the ego vehicle's left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence


class InvalidStateError(ValueError):
    """Raised when a kinematic state is non-finite or violates its invariants."""


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped == -math.pi:
        return math.pi
    return wrapped


def _check_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidStateError(f"{name}: non-finite value {v!r}")


@dataclass(frozen=True)
class EgoState:
    x: float
    y: float
    heading: float
    speed: float
    acceleration: float = 0.0
    half_length: float = 2.4
    half_width: float = 1.0
    wheelbase: float = 2.8

    def __post_init__(self) -> None:
        _check_finite("ego", self.x, self.y, self.heading, self.speed, self.acceleration)
        if self.speed < 0.0:
            raise InvalidStateError(f"ego: negative speed {self.speed}")
        if self.half_length <= 0.0 or self.half_width <= 0.0:
            raise InvalidStateError("ego: bounding box half-extents must be positive")
        if self.wheelbase <= 0.0:
            raise InvalidStateError("ego: wheelbase must be positive")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.speed * math.cos(self.heading), self.speed * math.sin(self.heading))


@dataclass(frozen=True)
class ObjectState:
    id: Hashable
    x: float
    y: float
    vx: float
    vy: float
    heading: float
    half_length: float = 2.4
    half_width: float = 1.0

    def __post_init__(self) -> None:
        _check_finite(f"object {self.id!r}", self.x, self.y, self.vx, self.vy, self.heading)
        if self.half_length <= 0.0 or self.half_width <= 0.0:
            raise InvalidStateError(f"object {self.id!r}: bounding box half-extents must be positive")
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True)
class RelativeKinematics:
    """Object position/velocity expressed in the ego body frame.

    ``theta_deg`` is the absolute heading difference in degrees, [0, 180].
    """

    dp_lon: float
    dp_lat: float
    v_lon: float
    v_lat: float
    bearing: float
    theta_deg: float


@dataclass(frozen=True)
class RoadContext:
    v_limit: float
    lanes: int = 2
    lane_width: float = 3.5

    def __post_init__(self) -> None:
        if not (self.v_limit > 0.0 and math.isfinite(self.v_limit)):
            raise ValueError(f"v_limit must be positive, got {self.v_limit}")
        if int(self.lanes) != self.lanes or self.lanes < 1:
            raise ValueError(f"lanes must be an integer >= 1, got {self.lanes}")
        if not self.lane_width > 0.0:
            raise ValueError(f"lane_width must be positive, got {self.lane_width}")


@dataclass(frozen=True)
class RssParams:
    t_reaction: float = 0.5
    a_max: float = 3.5
    a_min: float = 4.0

    def __post_init__(self) -> None:
        for name in ("t_reaction", "a_max", "a_min"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"RssParams.{name} must be positive, got {value}")


@dataclass(frozen=True)
class EnvelopeParams:
    rear_fraction: float = 0.5
    lateral_margin: float = 0.5
    d_min: float = 5.0

    def __post_init__(self) -> None:
        if self.rear_fraction < 0.0:
            raise ValueError("rear_fraction must be >= 0")
        if self.lateral_margin < 0.0:
            raise ValueError("lateral_margin must be >= 0")
        if self.d_min < 0.0:
            raise ValueError("d_min must be >= 0")


@dataclass(frozen=True)
class Envelope:
    """Axis-aligned region in the ego frame, closed on every side."""

    forward: float
    rear: float
    lateral: float
    d_rss: float = field(default=0.0, compare=False)

    def contains(self, dp_lon: float, dp_lat: float) -> bool:
        return -self.rear <= dp_lon <= self.forward and -self.lateral <= dp_lat <= self.lateral


def to_ego_frame(ego: EgoState, obj: ObjectState) -> RelativeKinematics:
    dx = obj.x - ego.x
    dy = obj.y - ego.y
    evx, evy = ego.velocity
    dvx = obj.vx - evx
    dvy = obj.vy - evy
    c = math.cos(ego.heading)
    s = math.sin(ego.heading)
    dp_lon = c * dx + s * dy
    dp_lat = -s * dx + c * dy
    v_lon = c * dvx + s * dvy
    v_lat = -s * dvx + c * dvy
    _check_finite("relative kinematics", dp_lon, dp_lat, v_lon, v_lat)
    theta = abs(wrap_angle(obj.heading - ego.heading))
    return RelativeKinematics(
        dp_lon=dp_lon,
        dp_lat=dp_lat,
        v_lon=v_lon,
        v_lat=v_lat,
        bearing=math.atan2(dp_lat, dp_lon),
        theta_deg=math.degrees(theta),
    )


def rss_distance(v_ego: float, v_front: float, p: RssParams = RssParams()) -> float:
    """Minimum safe longitudinal gap, clamped at zero."""
    if v_ego < 0.0 or v_front < 0.0:
        raise ValueError("speeds must be non-negative")
    t = p.t_reaction
    d = (
        v_ego * t
        + 0.5 * p.a_max * t * t
        + ((v_ego + t * p.a_max) ** 2 - v_front**2) / (2.0 * p.a_min)
    )
    return max(0.0, d)


def lead_speed(ego: EgoState, objects: Iterable[ObjectState], road: RoadContext) -> float:
    """Longitudinal speed of the nearest in-path leader, or the ego speed if none.

    In-path means ahead of the ego centre and within half a lane of its axis.
    The projected speed is floored at zero so oncoming traffic is treated as
    a stopped leader.
    """
    c = math.cos(ego.heading)
    s = math.sin(ego.heading)
    half_lane = 0.5 * road.lane_width
    best_gap = math.inf
    best_speed = ego.speed
    for obj in objects:
        dx = obj.x - ego.x
        dy = obj.y - ego.y
        lon = c * dx + s * dy
        lat = -s * dx + c * dy
        if lon > 0.0 and abs(lat) <= half_lane and lon < best_gap:
            best_gap = lon
            best_speed = max(0.0, c * obj.vx + s * obj.vy)
    return best_speed


def build_envelope(
    ego: EgoState,
    road: RoadContext,
    p: RssParams = RssParams(),
    lead: float | None = None,
    env: EnvelopeParams = EnvelopeParams(),
) -> Envelope:
    v_front = ego.speed if lead is None else lead
    d_rss = rss_distance(ego.speed, v_front, p)
    forward = max(d_rss, env.d_min)
    return Envelope(
        forward=forward,
        rear=forward * env.rear_fraction,
        lateral=road.lanes * road.lane_width / 2.0 + env.lateral_margin,
        d_rss=d_rss,
    )


def filter_objects(
    ego: EgoState, objects: Sequence[ObjectState], env: Envelope
) -> list[tuple[ObjectState, RelativeKinematics]]:
    kept = []
    for obj in objects:
        rel = to_ego_frame(ego, obj)
        if env.contains(rel.dp_lon, rel.dp_lat):
            kept.append((obj, rel))
    return kept
