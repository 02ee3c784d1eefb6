"""Per-object risk factors and their fusion into a single risk index."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from cri.geometry import (
    EgoState,
    EnvelopeParams,
    RelativeKinematics,
    RoadContext,
    RssParams,
)

# Orientation risk peaks (== 1) where the cosine argument reaches pi.
ORIENTATION_SCALE = 101.25
ORIENTATION_PHASE = math.pi / 10.0


class DomainError(ValueError):
    """Input outside the mathematical domain of a risk factor."""


@dataclass(frozen=True)
class RiskParams:
    epsilon: float = 1e-6
    alpha: float = 0.7
    beta: float = 0.7
    speed_ref: float = 0.5
    rss: RssParams = field(default_factory=RssParams)
    envelope: EnvelopeParams = field(default_factory=EnvelopeParams)

    def __post_init__(self) -> None:
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        for name in ("alpha", "beta", "speed_ref"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class RiskFactors:
    f_orientation: float
    f_lon: float
    f_lat: float
    f_speed: float
    f_spatial: float
    ttc_lon: float = math.inf
    ttc_lat: float = math.inf

    @property
    def f_max(self) -> float:
        return max(self.f_orientation, self.f_lon, self.f_lat)


@dataclass(frozen=True)
class ObjectRisk:
    id: Hashable
    factors: RiskFactors
    cri: float
    bearing: float


def orientation_risk(theta_deg: float) -> float:
    if not 0.0 <= theta_deg <= 180.0:
        raise DomainError(f"heading difference must be in [0, 180] degrees, got {theta_deg}")
    return 0.5 * (1.0 - math.cos(theta_deg * math.pi / ORIENTATION_SCALE + ORIENTATION_PHASE))


def approach_product(dp: float, v: float) -> float:
    """Negative when the separation along the axis is shrinking."""
    return dp * v


def directional_risk(dp: float, v: float, epsilon: float = 1e-6) -> tuple[float, float]:
    """Return ``(risk, ttc)`` for one body axis; receding axes give ``(0, inf)``."""
    if approach_product(dp, v) >= 0.0:
        return 0.0, math.inf
    ttc = abs(dp) / (abs(v) + epsilon)
    return math.exp(-ttc), ttc


def speed_risk(v_ego: float, road: RoadContext) -> float:
    if road.v_limit <= 0.0:
        raise DomainError("speed limit must be positive")
    z = 5.0 * (v_ego - road.v_limit) / road.v_limit + 1.5 * road.lanes - 2.0
    # numerically stable logistic
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def fuse_spatial(*factors: float) -> float:
    """Noisy-or combination of independent risk factors."""
    keep = 1.0
    for f in factors:
        if not 0.0 <= f <= 1.0:
            raise DomainError(f"risk factor outside [0, 1]: {f}")
        keep *= 1.0 - f
    return 1.0 - keep


def speed_modulation(f_speed: float, speed_ref: float) -> float:
    # exp(f - ref) / exp(ref)
    return math.exp(f_speed - speed_ref) / math.exp(speed_ref)


def object_cri(factors: RiskFactors, params: RiskParams = RiskParams()) -> float:
    bracket = params.alpha * factors.f_spatial + (1.0 - params.alpha) * factors.f_max
    value = bracket * speed_modulation(factors.f_speed, params.speed_ref)
    return min(1.0, max(0.0, value))


def assess_object(
    ego: EgoState,
    rel: RelativeKinematics,
    road: RoadContext,
    params: RiskParams = RiskParams(),
    object_id: Hashable = None,
) -> ObjectRisk:
    f_or = orientation_risk(min(180.0, rel.theta_deg))
    f_lon, ttc_lon = directional_risk(rel.dp_lon, rel.v_lon, params.epsilon)
    f_lat, ttc_lat = directional_risk(rel.dp_lat, rel.v_lat, params.epsilon)
    factors = RiskFactors(
        f_orientation=f_or,
        f_lon=f_lon,
        f_lat=f_lat,
        f_speed=speed_risk(ego.speed, road),
        f_spatial=fuse_spatial(f_or, f_lon, f_lat),
        ttc_lon=ttc_lon,
        ttc_lat=ttc_lat,
    )
    return ObjectRisk(id=object_id, factors=factors, cri=object_cri(factors, params), bearing=rel.bearing)


@dataclass
class FactorTable:
    """Column-oriented risk factors for a batch of objects.

    Produced by :func:`assess_batch`; ``rows()`` materializes
    :class:`ObjectRisk` records when per-object detail is needed.
    """

    ids: list
    dp_lon: np.ndarray
    dp_lat: np.ndarray
    bearing: np.ndarray
    f_orientation: np.ndarray
    f_lon: np.ndarray
    f_lat: np.ndarray
    f_speed: float
    f_spatial: np.ndarray
    ttc_lon: np.ndarray
    ttc_lat: np.ndarray
    cri: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)

    def rows(self) -> list[ObjectRisk]:
        out = []
        for i, oid in enumerate(self.ids):
            factors = RiskFactors(
                f_orientation=float(self.f_orientation[i]),
                f_lon=float(self.f_lon[i]),
                f_lat=float(self.f_lat[i]),
                f_speed=self.f_speed,
                f_spatial=float(self.f_spatial[i]),
                ttc_lon=float(self.ttc_lon[i]),
                ttc_lat=float(self.ttc_lat[i]),
            )
            out.append(ObjectRisk(oid, factors, float(self.cri[i]), float(self.bearing[i])))
        return out


def _directional_batch(dp: np.ndarray, v: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    approaching = dp * v < 0.0
    ttc = np.full(dp.shape, np.inf)
    ttc[approaching] = np.abs(dp[approaching]) / (np.abs(v[approaching]) + epsilon)
    f = np.zeros(dp.shape)
    f[approaching] = np.exp(-ttc[approaching])
    return f, ttc


def assess_batch(
    ids: Sequence,
    dp_lon: np.ndarray,
    dp_lat: np.ndarray,
    v_lon: np.ndarray,
    v_lat: np.ndarray,
    theta_deg: np.ndarray,
    v_ego: float,
    road: RoadContext,
    params: RiskParams = RiskParams(),
) -> FactorTable:
    """Vectorized equivalent of :func:`assess_object` over many objects."""
    theta = np.minimum(theta_deg, 180.0)
    f_or = 0.5 * (1.0 - np.cos(theta * (math.pi / ORIENTATION_SCALE) + ORIENTATION_PHASE))
    f_lon, ttc_lon = _directional_batch(dp_lon, v_lon, params.epsilon)
    f_lat, ttc_lat = _directional_batch(dp_lat, v_lat, params.epsilon)
    f_speed = speed_risk(v_ego, road)
    f_spatial = 1.0 - (1.0 - f_or) * (1.0 - f_lon) * (1.0 - f_lat)
    f_max = np.maximum(np.maximum(f_or, f_lon), f_lat)
    bracket = params.alpha * f_spatial + (1.0 - params.alpha) * f_max
    cri = np.clip(bracket * speed_modulation(f_speed, params.speed_ref), 0.0, 1.0)
    return FactorTable(
        ids=list(ids),
        dp_lon=dp_lon,
        dp_lat=dp_lat,
        bearing=np.arctan2(dp_lat, dp_lon),
        f_orientation=f_or,
        f_lon=f_lon,
        f_lat=f_lat,
        f_speed=f_speed,
        f_spatial=f_spatial,
        ttc_lon=ttc_lon,
        ttc_lat=ttc_lat,
        cri=cri,
    )
