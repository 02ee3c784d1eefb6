"""Scenario documents: schema, validation and loading.

Scenarios are JSON objects tagged with ``"schema": "cri-scenario/1"``.
Validation errors carry the path of the offending field, for example
``npcs[1].speeds``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

SCHEMA_TAG = "cri-scenario/1"
FP_TAG = "fp"
SUFFIXES = (".scn", ".json")


class ScenarioError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class StopPoint:
    x: float
    y: float
    wait: float = 1.0


@dataclass(frozen=True)
class NpcScript:
    id: str
    waypoints: tuple[tuple[float, float], ...]
    speeds: tuple[float, ...]
    spawn_time: float = 0.0
    half_length: float = 2.4
    half_width: float = 1.0
    stops: tuple[StopPoint, ...] = ()
    violates_stops: bool = False
    accel_limit: float = 6.0
    on_end: str = "despawn"


@dataclass(frozen=True)
class EgoSpec:
    speed: float = 0.0
    half_length: float = 2.4
    half_width: float = 1.0
    wheelbase: float = 2.8
    cruise_speed: float | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    route: tuple[tuple[float, float], ...]
    speed_limit: float
    lanes: int = 2
    lane_width: float = 3.5
    ego: EgoSpec = field(default_factory=EgoSpec)
    npcs: tuple[NpcScript, ...] = ()
    stop_triggers: tuple[StopPoint, ...] = ()
    duration_limit: float = 30.0
    dt: float | None = None
    tags: tuple[str, ...] = ()
    description: str = ""

    @property
    def failure_prone(self) -> bool:
        return FP_TAG in self.tags


# --- validation helpers -----------------------------------------------------

def _obj(doc: Any, where: str) -> dict:
    if not isinstance(doc, dict):
        raise ScenarioError(where, f"expected an object, got {type(doc).__name__}")
    return doc


def _num(doc: dict, key: str, where: str, default: Any = ..., *, lo: float | None = None,
         strict: bool = False) -> Any:
    loc = f"{where}.{key}" if where else key
    if key not in doc:
        if default is ...:
            raise ScenarioError(loc, "required field missing")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ScenarioError(loc, f"expected a finite number, got {value!r}")
    if lo is not None and (value <= lo if strict else value < lo):
        raise ScenarioError(loc, f"must be {'>' if strict else '>='} {lo}, got {value}")
    return float(value)


def _points(value: Any, where: str, min_len: int) -> tuple[tuple[float, float], ...]:
    if not isinstance(value, list) or len(value) < min_len:
        raise ScenarioError(where, f"expected a list of at least {min_len} [x, y] points")
    pts = []
    for i, p in enumerate(value):
        if (
            not isinstance(p, list)
            or len(p) != 2
            or not all(isinstance(c, (int, float)) and not isinstance(c, bool) and math.isfinite(c) for c in p)
        ):
            raise ScenarioError(f"{where}[{i}]", f"expected [x, y], got {p!r}")
        pts.append((float(p[0]), float(p[1])))
    for i in range(1, len(pts)):
        if pts[i] == pts[i - 1]:
            raise ScenarioError(f"{where}[{i}]", "duplicate consecutive waypoint")
    return tuple(pts)


def _check_keys(doc: dict, allowed: set[str], where: str) -> None:
    for key in doc:
        if key not in allowed:
            raise ScenarioError(f"{where}.{key}" if where else key, "unknown field")


def _stop(doc: Any, where: str) -> StopPoint:
    doc = _obj(doc, where)
    _check_keys(doc, {"x", "y", "wait"}, where)
    return StopPoint(_num(doc, "x", where), _num(doc, "y", where), _num(doc, "wait", where, 1.0, lo=0.0))


def _npc(doc: Any, where: str) -> NpcScript:
    doc = _obj(doc, where)
    _check_keys(
        doc,
        {"id", "waypoints", "speeds", "spawn_time", "half_length", "half_width", "stops",
         "violates_stops", "accel_limit", "on_end"},
        where,
    )
    if "id" not in doc or not isinstance(doc["id"], str):
        raise ScenarioError(f"{where}.id", "required string field")
    wps = _points(doc.get("waypoints"), f"{where}.waypoints", 2)
    raw = doc.get("speeds")
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        raw = [raw] * (len(wps) - 1)
    if not isinstance(raw, list) or len(raw) != len(wps) - 1:
        raise ScenarioError(f"{where}.speeds", f"expected {len(wps) - 1} per-segment speeds")
    speeds = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
            raise ScenarioError(f"{where}.speeds[{i}]", f"speeds must be finite and >= 0, got {v!r}")
        speeds.append(float(v))
    on_end = doc.get("on_end", "despawn")
    if on_end not in ("despawn", "hold"):
        raise ScenarioError(f"{where}.on_end", "must be 'despawn' or 'hold'")
    violates = doc.get("violates_stops", False)
    if not isinstance(violates, bool):
        raise ScenarioError(f"{where}.violates_stops", "must be a boolean")
    stops = doc.get("stops", [])
    if not isinstance(stops, list):
        raise ScenarioError(f"{where}.stops", "expected a list")
    return NpcScript(
        id=doc["id"],
        waypoints=wps,
        speeds=tuple(speeds),
        spawn_time=_num(doc, "spawn_time", where, 0.0, lo=0.0),
        half_length=_num(doc, "half_length", where, 2.4, lo=0.0, strict=True),
        half_width=_num(doc, "half_width", where, 1.0, lo=0.0, strict=True),
        stops=tuple(_stop(s, f"{where}.stops[{i}]") for i, s in enumerate(stops)),
        violates_stops=violates,
        accel_limit=_num(doc, "accel_limit", where, 6.0, lo=0.0, strict=True),
        on_end=on_end,
    )


def scenario_from_dict(doc: Any) -> Scenario:
    doc = _obj(doc, "<root>")
    _check_keys(
        doc,
        {"schema", "name", "description", "tags", "map", "ego", "npcs", "stop_triggers",
         "duration_limit", "dt"},
        "",
    )
    if doc.get("schema") != SCHEMA_TAG:
        raise ScenarioError("schema", f"expected {SCHEMA_TAG!r}, got {doc.get('schema')!r}")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("name", "required non-empty string")
    tags = doc.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ScenarioError("tags", "expected a list of strings")

    m = _obj(doc.get("map"), "map")
    _check_keys(m, {"lanes", "lane_width", "speed_limit", "route"}, "map")
    lanes = m.get("lanes", 2)
    if isinstance(lanes, bool) or not isinstance(lanes, int) or lanes < 1:
        raise ScenarioError("map.lanes", f"expected an integer >= 1, got {lanes!r}")

    e = _obj(doc.get("ego", {}), "ego")
    _check_keys(e, {"speed", "half_length", "half_width", "wheelbase", "cruise_speed"}, "ego")
    cruise = e.get("cruise_speed")
    ego = EgoSpec(
        speed=_num(e, "speed", "ego", 0.0, lo=0.0),
        half_length=_num(e, "half_length", "ego", 2.4, lo=0.0, strict=True),
        half_width=_num(e, "half_width", "ego", 1.0, lo=0.0, strict=True),
        wheelbase=_num(e, "wheelbase", "ego", 2.8, lo=0.0, strict=True),
        cruise_speed=None if cruise is None else _num(e, "cruise_speed", "ego", lo=0.0, strict=True),
    )
    npcs = doc.get("npcs", [])
    if not isinstance(npcs, list):
        raise ScenarioError("npcs", "expected a list")
    scripts = tuple(_npc(n, f"npcs[{i}]") for i, n in enumerate(npcs))
    ids = [s.id for s in scripts]
    if len(set(ids)) != len(ids):
        raise ScenarioError("npcs", "NPC ids must be unique")
    triggers = doc.get("stop_triggers", [])
    if not isinstance(triggers, list):
        raise ScenarioError("stop_triggers", "expected a list")

    return Scenario(
        name=name,
        description=str(doc.get("description", "")),
        tags=tuple(tags),
        route=_points(m.get("route"), "map.route", 2),
        speed_limit=_num(m, "speed_limit", "map", lo=0.0, strict=True),
        lanes=lanes,
        lane_width=_num(m, "lane_width", "map", 3.5, lo=0.0, strict=True),
        ego=ego,
        npcs=scripts,
        stop_triggers=tuple(_stop(s, f"stop_triggers[{i}]") for i, s in enumerate(triggers)),
        duration_limit=_num(doc, "duration_limit", "", 30.0, lo=0.0, strict=True),
        dt=None if doc.get("dt") is None else _num(doc, "dt", "", lo=0.0, strict=True),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return scenario_from_dict(doc)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}:{exc.where}", str(exc).split(": ", 1)[1]) from exc


def builtin_dir() -> Path:
    return Path(str(resources.files("cri.sim") / "scenarios"))


def scenario_files(path: str | Path) -> list[Path]:
    path = Path(path)
    return sorted(p for p in path.iterdir() if p.suffix in SUFFIXES and p.is_file())


def builtin_names() -> list[str]:
    return [p.stem for p in scenario_files(builtin_dir())]


def resolve_scenario(ref: str | Path) -> Scenario:
    """Load from a path, or by name from the bundled corpus."""
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    for suffix in SUFFIXES:
        candidate = builtin_dir() / f"{Path(str(ref)).stem}{suffix}"
        if candidate.exists():
            return load_scenario(candidate)
    raise FileNotFoundError(f"no scenario file or built-in scenario named {str(ref)!r}")


def load_directory(path: str | Path) -> list[Scenario]:
    path = Path(path)
    if not path.is_dir():
        raise ScenarioError(str(path), "not a directory")
    files = scenario_files(path)
    if not files:
        raise ScenarioError(str(path), "directory contains no scenario files")
    return [load_scenario(f) for f in files]
