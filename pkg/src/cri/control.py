"""Driving-mode selection and risk-adaptive modulation of control commands.

``decision_cycle`` runs the whole per-tick pipeline: envelope, per-object
risk, sector fusion, mode selection and command adaptation.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from cri.geometry import (
    EgoState,
    Envelope,
    ObjectState,
    RoadContext,
    build_envelope,
)
from cri.risk import FactorTable, RiskParams, assess_batch
from cri.sectors import (
    FRONT_SECTORS,
    LEFT_SECTOR,
    RIGHT_SECTOR,
    SectorField,
    aggregate_arrays,
    fuse,
)

logger = logging.getLogger(__name__)


class DrivingMode(enum.IntEnum):
    # ordered by caution so comparisons read naturally
    AGGRESSIVE = 0
    NEUTRAL = 1
    CONSERVATIVE = 2

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class ControlCommand:
    throttle: float = 0.0
    brake: float = 0.0
    steer: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.throttle <= 1.0:
            raise ValueError(f"throttle outside [0, 1]: {self.throttle}")
        if not 0.0 <= self.brake <= 1.0:
            raise ValueError(f"brake outside [0, 1]: {self.brake}")
        if not -1.0 <= self.steer <= 1.0:
            raise ValueError(f"steer outside [-1, 1]: {self.steer}")


@dataclass(frozen=True)
class ControllerParams:
    t_lo: float = 0.30
    t_hi: float = 0.60
    hysteresis: float = 0.05
    n_hold: int = 3
    front_delta: float = 0.05
    throttle_scale_aggressive: float = 1.0
    throttle_scale_neutral: float = 0.8
    throttle_scale_conservative: float = 0.5
    neutral_brake_floor: float = 0.2
    neutral_brake_trigger: float = 0.5
    emergency_brake: float = 0.8
    steer_bias: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 <= self.t_lo <= self.t_hi <= 1.0:
            raise ValueError("thresholds must satisfy 0 <= t_lo <= t_hi <= 1")
        if self.hysteresis < 0.0 or self.front_delta < 0.0:
            raise ValueError("hysteresis and front_delta must be >= 0")
        if self.n_hold < 1:
            raise ValueError("n_hold must be >= 1")
        for name in (
            "throttle_scale_aggressive",
            "throttle_scale_neutral",
            "throttle_scale_conservative",
            "neutral_brake_floor",
            "neutral_brake_trigger",
            "emergency_brake",
            "steer_bias",
        ):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def throttle_scale(self, mode: DrivingMode) -> float:
        return {
            DrivingMode.AGGRESSIVE: self.throttle_scale_aggressive,
            DrivingMode.NEUTRAL: self.throttle_scale_neutral,
            DrivingMode.CONSERVATIVE: self.throttle_scale_conservative,
        }[mode]


@dataclass
class ControllerState:
    params: ControllerParams = field(default_factory=ControllerParams)
    mode: DrivingMode = DrivingMode.AGGRESSIVE
    ticks_in_mode: int = 0
    # consecutive ticks the candidate mode sat above / below the current one
    up_count: int = 0
    down_count: int = 0

    def copy(self) -> "ControllerState":
        return dataclasses.replace(self)


def is_frontal(theta_star: float) -> bool:
    return abs(theta_star) <= math.pi / 4.0 + 1e-12


def is_lateral(theta_star: float) -> bool:
    return math.pi / 4.0 + 1e-12 < abs(theta_star) < 3.0 * math.pi / 4.0 - 1e-12


def _thresholds(theta_star: float, p: ControllerParams) -> tuple[float, float]:
    shift = p.front_delta if is_frontal(theta_star) else 0.0
    return p.t_lo - shift, p.t_hi - shift


def candidate_mode(cri_final: float, theta_star: float, p: ControllerParams) -> DrivingMode:
    lo, hi = _thresholds(theta_star, p)
    if cri_final >= hi:
        return DrivingMode.CONSERVATIVE
    if cri_final < lo:
        return DrivingMode.AGGRESSIVE
    return DrivingMode.NEUTRAL


def select_mode(cri_final: float, theta_star: float, state: ControllerState) -> DrivingMode:
    """Pick the driving mode for this tick, updating ``state`` in place.

    A change of mode needs either ``n_hold`` consecutive ticks of a candidate
    on the same side of the current mode, or a value that clears the
    boundary being crossed by at least ``hysteresis``.
    """
    p = state.params
    lo, hi = _thresholds(theta_star, p)
    cand = candidate_mode(cri_final, theta_star, p)
    current = state.mode

    switch = False
    if cand > current:
        state.up_count += 1
        state.down_count = 0
        boundary = lo if current == DrivingMode.AGGRESSIVE else hi
        switch = state.up_count >= p.n_hold or cri_final >= boundary + p.hysteresis
    elif cand < current:
        state.down_count += 1
        state.up_count = 0
        boundary = hi if current == DrivingMode.CONSERVATIVE else lo
        switch = state.down_count >= p.n_hold or cri_final < boundary - p.hysteresis
    else:
        state.up_count = 0
        state.down_count = 0

    if switch:
        logger.debug("mode %s -> %s (cri=%.3f)", current.label, cand.label, cri_final)
        state.mode = cand
        state.ticks_in_mode = 0
        state.up_count = 0
        state.down_count = 0
    else:
        state.ticks_in_mode += 1
    return state.mode


def _clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def adapt_control(
    baseline: ControlCommand,
    mode: DrivingMode,
    sf: SectorField,
    ego: EgoState | None = None,
    params: ControllerParams = ControllerParams(),
) -> ControlCommand:
    if mode == DrivingMode.AGGRESSIVE:
        return baseline

    r_star = sf.r_star
    frontal = r_star > 0.0 and sf.dominant_sector in FRONT_SECTORS
    throttle = baseline.throttle * params.throttle_scale(mode)
    brake = baseline.brake
    steer = baseline.steer

    if mode == DrivingMode.NEUTRAL:
        if frontal and r_star >= params.neutral_brake_trigger:
            brake = max(brake, params.neutral_brake_floor)
    else:
        if frontal:
            brake = max(brake, params.emergency_brake * r_star)
        elif r_star > 0.0 and sf.dominant_sector in (LEFT_SECTOR, RIGHT_SECTOR):
            # steer away from the threat; positive steer turns left
            away = -1.0 if sf.dominant_sector == LEFT_SECTOR else 1.0
            steer = steer + away * params.steer_bias * r_star

    brake = _clip(brake, 0.0, 1.0)
    if brake > 0.0:
        throttle = 0.0
    return ControlCommand(
        throttle=_clip(throttle, 0.0, 1.0),
        brake=brake,
        steer=_clip(steer, -1.0, 1.0),
    )


@dataclass
class CycleDiagnostics:
    envelope: Envelope | None = None
    table: FactorTable | None = None
    sectors: SectorField = field(default_factory=SectorField)
    mode: DrivingMode = DrivingMode.AGGRESSIVE
    lead_speed: float = 0.0
    n_candidates: int = 0
    timings_us: dict = field(default_factory=dict)
    failed: bool = False
    error: str | None = None


def _object_arrays(objects: Sequence[ObjectState]) -> np.ndarray:
    return np.array(
        [(o.x, o.y, o.vx, o.vy, o.heading) for o in objects], dtype=float
    ).reshape(-1, 5)


def _lead_speed(lon: np.ndarray, lat: np.ndarray, vlon_abs: np.ndarray, ego: EgoState, road: RoadContext) -> float:
    in_path = (lon > 0.0) & (np.abs(lat) <= 0.5 * road.lane_width)
    if not in_path.any():
        return ego.speed
    idx = np.flatnonzero(in_path)
    nearest = idx[np.argmin(lon[idx])]
    return max(0.0, float(vlon_abs[nearest]))


def decision_cycle(
    ego: EgoState,
    objects: Sequence[ObjectState],
    road: RoadContext,
    params: RiskParams,
    state: ControllerState,
    baseline: ControlCommand,
) -> tuple[ControlCommand, SectorField, CycleDiagnostics]:
    """One pass of the risk-adaptive control loop.

    Any exception inside the pipeline yields the baseline command unchanged,
    a flagged diagnostics record and an untouched ``state``.
    """
    diag = CycleDiagnostics(mode=state.mode)
    clock = time.perf_counter_ns
    t0 = clock()
    try:
        c, s = math.cos(ego.heading), math.sin(ego.heading)
        arr = _object_arrays(objects)
        dx = arr[:, 0] - ego.x
        dy = arr[:, 1] - ego.y
        lon = c * dx + s * dy
        lat = -s * dx + c * dy
        ovlon = c * arr[:, 2] + s * arr[:, 3]
        ovlat = -s * arr[:, 2] + c * arr[:, 3]

        lead = _lead_speed(lon, lat, ovlon, ego, road)
        env = build_envelope(ego, road, params.rss, lead, params.envelope)
        inside = (lon >= -env.rear) & (lon <= env.forward) & (np.abs(lat) <= env.lateral)
        idx = np.flatnonzero(inside)
        t1 = clock()

        dh = arr[idx, 4] - ego.heading
        theta = np.degrees(np.abs(np.remainder(dh + math.pi, 2.0 * math.pi) - math.pi))
        table = assess_batch(
            [objects[i].id for i in idx],
            lon[idx],
            lat[idx],
            ovlon[idx] - ego.speed,
            ovlat[idx],
            theta,
            ego.speed,
            road,
            params,
        )
        t2 = clock()

        sf = fuse(aggregate_arrays(table.bearing, table.cri), params.beta)
        t3 = clock()

        trial = state.copy()
        mode = select_mode(sf.cri_final, sf.theta_star, trial)
        command = adapt_control(baseline, mode, sf, ego, trial.params)
        t4 = clock()
    except Exception as exc:  # fail-safe: never let risk code block the baseline
        logger.warning("decision cycle failed, passing baseline through: %r", exc)
        diag.failed = True
        diag.error = repr(exc)
        diag.timings_us = {"total": (clock() - t0) / 1e3}
        return baseline, SectorField(), diag

    state.mode = trial.mode
    state.ticks_in_mode = trial.ticks_in_mode
    state.up_count = trial.up_count
    state.down_count = trial.down_count

    diag.envelope = env
    diag.table = table
    diag.sectors = sf
    diag.mode = mode
    diag.lead_speed = lead
    diag.n_candidates = len(objects)
    diag.timings_us = {
        "envelope": (t1 - t0) / 1e3,
        "risk": (t2 - t1) / 1e3,
        "fusion": (t3 - t2) / 1e3,
        "adaptation": (t4 - t3) / 1e3,
        "total": (t4 - t0) / 1e3,
    }
    return command, sf, diag
