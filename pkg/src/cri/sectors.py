"""Eight-sector directional risk map and vector-max fusion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from cri.risk import ObjectRisk

N_SECTORS = 8
SECTOR_WIDTH = 2.0 * math.pi / N_SECTORS
SECTOR_CENTERS = np.arange(N_SECTORS) * SECTOR_WIDTH
_COS = np.cos(SECTOR_CENTERS)
_SIN = np.sin(SECTOR_CENTERS)

FRONT_SECTORS = frozenset({7, 0, 1})
LEFT_SECTOR = 2
RIGHT_SECTOR = 6


@dataclass
class SectorField:
    R: np.ndarray = field(default_factory=lambda: np.zeros(N_SECTORS))
    r_vector: float = 0.0
    r_max: float = 0.0
    cri_final_raw: float = 0.0
    cri_final: float = 0.0
    dominant_sector: int = 0
    fused: bool = False

    @property
    def theta(self) -> np.ndarray:
        return SECTOR_CENTERS

    @property
    def theta_star(self) -> float:
        """Centre angle of the dominant sector, wrapped to (-pi, pi]."""
        d = self.dominant_sector
        return d * SECTOR_WIDTH if d <= N_SECTORS // 2 else (d - N_SECTORS) * SECTOR_WIDTH

    @property
    def r_star(self) -> float:
        return float(self.R[self.dominant_sector])

    def to_dict(self) -> dict:
        return {
            "R": [float(r) for r in self.R],
            "r_vector": self.r_vector,
            "r_max": self.r_max,
            "cri_final_raw": self.cri_final_raw,
            "cri_final": self.cri_final,
            "dominant_sector": self.dominant_sector,
        }


def assign_sector(bearing: float) -> int:
    """Sector index for a bearing in (-pi, pi].

    Sector ``d`` is centred on ``d * pi/4`` and covers the half-open interval
    ``(centre - pi/8, centre + pi/8]``; a bearing on a boundary belongs to the
    sector on its clockwise side.
    """
    u = bearing / (SECTOR_WIDTH / 2.0)  # units of pi/8; boundaries at odd u
    return int(math.ceil((u - 1.0) / 2.0)) % N_SECTORS


def assign_sectors(bearings: np.ndarray) -> np.ndarray:
    u = np.asarray(bearings, dtype=float) / (SECTOR_WIDTH / 2.0)
    return np.ceil((u - 1.0) / 2.0).astype(np.int64) % N_SECTORS


def aggregate(objects: Iterable[ObjectRisk]) -> SectorField:
    R = np.zeros(N_SECTORS)
    for obj in objects:
        d = assign_sector(obj.bearing)
        if obj.cri > R[d]:
            R[d] = obj.cri
    return SectorField(R=R)


def aggregate_arrays(bearings: np.ndarray, cri: np.ndarray) -> SectorField:
    R = np.zeros(N_SECTORS)
    if len(cri):
        np.maximum.at(R, assign_sectors(bearings), cri)
    return SectorField(R=R)


def fuse(sf: SectorField, beta: float = 0.7) -> SectorField:
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    R = np.asarray(sf.R, dtype=float)
    r_vector = math.hypot(float(R @ _COS), float(R @ _SIN))
    d_star = int(np.argmax(R))  # first maximum -> lowest index wins ties
    r_max = float(R[d_star])
    raw = beta * r_vector + (1.0 - beta) * r_max
    return SectorField(
        R=R,
        r_vector=r_vector,
        r_max=r_max,
        cri_final_raw=raw,
        cri_final=min(1.0, raw),
        dominant_sector=d_star,
        fused=True,
    )
