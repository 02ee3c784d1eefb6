"""Run configuration: every tunable constant in one validated document.

Precedence is defaults < config file < ``--set key=value`` overrides.  Keys
are ``section.field`` paths; a bare field name is accepted when exactly one
section defines it (``speed_ref=0.3``).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from cri.control import ControllerParams
from cri.geometry import EnvelopeParams, RssParams
from cri.metrics import DEFAULT_COLLISION_PENALTY
from cri.risk import RiskParams
from cri.sim.baseline import BaselineParams
from cri.sim.runner import RunParams
from cri.sim.world import SimParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RiskSection:
    epsilon: float = 1e-6
    alpha: float = 0.7
    beta: float = 0.7
    speed_ref: float = 0.5


@dataclass(frozen=True)
class MetricsSection:
    collision_penalty: float = DEFAULT_COLLISION_PENALTY

    def __post_init__(self) -> None:
        if not 0.0 <= self.collision_penalty <= 1.0:
            raise ValueError(f"collision_penalty must lie in [0, 1], got {self.collision_penalty}")


@dataclass(frozen=True)
class TraceSection:
    timing: bool = True  # include per-tick timing in trace files


@dataclass(frozen=True)
class Config:
    risk: RiskSection = field(default_factory=RiskSection)
    rss: RssParams = field(default_factory=RssParams)
    envelope: EnvelopeParams = field(default_factory=EnvelopeParams)
    controller: ControllerParams = field(default_factory=ControllerParams)
    sim: SimParams = field(default_factory=SimParams)
    baseline: BaselineParams = field(default_factory=BaselineParams)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    trace: TraceSection = field(default_factory=TraceSection)

    def risk_params(self) -> RiskParams:
        return RiskParams(**dataclasses.asdict(self.risk), rss=self.rss, envelope=self.envelope)

    def run_params(self) -> RunParams:
        return RunParams(risk=self.risk_params(), controller=self.controller, sim=self.sim,
                         baseline=self.baseline)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(Config)}


def _section_fields(section: str) -> dict[str, dataclasses.Field]:
    return {f.name: f for f in dataclasses.fields(SECTIONS[section]())}


def _coerce(path: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported field type")


def _resolve_key(key: str) -> tuple[str, str]:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SECTIONS:
            raise ConfigError(f"{key}: unknown section {section!r}")
        if name not in _section_fields(section):
            raise ConfigError(f"{key}: unknown key")
        return section, name
    owners = [s for s in SECTIONS if key in _section_fields(s)]
    if not owners:
        raise ConfigError(f"{key}: unknown key")
    if len(owners) > 1:
        raise ConfigError(f"{key}: ambiguous, qualify it as one of " + ", ".join(f"{s}.{key}" for s in owners))
    return owners[0], key


def apply(config: Config, updates: Mapping[str, Mapping[str, Any]]) -> Config:
    """Return ``config`` with nested ``{section: {field: value}}`` updates applied."""
    sections = {}
    for section, values in updates.items():
        if section not in SECTIONS:
            raise ConfigError(f"{section}: unknown section")
        if not isinstance(values, Mapping):
            raise ConfigError(f"{section}: expected an object")
        current = getattr(config, section)
        fields = _section_fields(section)
        changes = {}
        for name, value in values.items():
            if name not in fields:
                raise ConfigError(f"{section}.{name}: unknown key")
            changes[name] = _coerce(f"{section}.{name}", value, getattr(current, name))
        try:
            sections[section] = dataclasses.replace(current, **changes)
        except ValueError as exc:
            raise ConfigError(f"{section}: {exc}") from exc
    out = dataclasses.replace(config, **sections)
    try:
        out.risk_params()  # cross-check the assembled parameter set
    except ValueError as exc:
        raise ConfigError(f"risk: {exc}") from exc
    return out


def parse_overrides(items: Iterable[str]) -> dict[str, dict[str, Any]]:
    """Turn ``key=value`` strings into nested updates; values parse as JSON when possible."""
    nested: dict[str, dict[str, Any]] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"{item}: expected key=value")
        key, raw = item.split("=", 1)
        section, name = _resolve_key(key.strip())
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        nested.setdefault(section, {})[name] = value
    return nested


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> Config:
    config = Config()
    if path is not None:
        text = Path(path).read_text()
        if text.strip():
            try:
                doc = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
            if not isinstance(doc, dict):
                raise ConfigError(f"{path}: expected an object at the top level")
            config = apply(config, doc)
    return apply(config, parse_overrides(overrides))
