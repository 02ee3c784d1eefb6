"""Evaluation metrics and baseline-versus-CRI comparison reports.

Route-level metrics are computed from a run's trace and outcome, then
aggregated into suite rows.  Undefined quantities (jerk over fewer than
three samples, CpK over zero distance, a percent change from zero) are
reported as ``None`` rather than as a misleading number.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

DEFAULT_COLLISION_PENALTY = 0.60


class PairingError(ValueError):
    """Baseline and CRI runs do not line up one-to-one."""


class ComparisonError(ValueError):
    """Two suites cover different scenario sets."""


# --- route level ------------------------------------------------------------

class JerkStats(NamedTuple):
    mean_abs: float
    std_abs: float
    max_abs: float


def jerk_stats(samples: Sequence[tuple[float, float]], dt: float) -> JerkStats | None:
    """Jerk statistics of a uniformly sampled speed trace of ``(t, v)`` pairs.

    Returns ``None`` when there are fewer than three samples.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if len(samples) < 3:
        return None
    t = np.array([s[0] for s in samples], dtype=float)
    v = np.array([s[1] for s in samples], dtype=float)
    if not np.allclose(np.diff(t), dt, rtol=0.0, atol=1e-6 * max(1.0, dt)):
        raise ValueError("speed trace is not uniformly sampled at dt")
    jerk = np.abs(np.diff(v, n=2)) / (dt * dt)
    return JerkStats(float(jerk.mean()), float(jerk.std()), float(jerk.max()))


def composed_score(completion: float, collisions: int,
                   penalty: float = DEFAULT_COLLISION_PENALTY) -> tuple[float, float]:
    """Return ``(CS, SP)``; SP is the fraction lost to infractions, higher is worse."""
    if not 0.0 <= completion <= 1.0:
        raise ValueError(f"completion must lie in [0, 1], got {completion}")
    if collisions < 0:
        raise ValueError("collisions must be >= 0")
    if not 0.0 <= penalty <= 1.0:
        raise ValueError("penalty factor must lie in [0, 1]")
    factor = penalty ** collisions
    return 100.0 * completion * factor, 1.0 - factor


@dataclass(frozen=True)
class RouteMetrics:
    scenario: str
    collisions: int
    distance_km: float
    completed: bool
    completion: float
    composed_score: float
    score_penalty: float
    mean_abs_jerk: float | None
    std_abs_jerk: float | None
    max_jerk: float | None
    timed_out: bool = False
    failure_prone: bool = False
    runtime_us: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.distance_km < 0.0:
            raise ValueError("distance must be >= 0")
        if not 0.0 <= self.composed_score <= 100.0:
            raise ValueError("composed score outside [0, 100]")

    @classmethod
    def from_run(cls, result, dt: float, penalty: float = DEFAULT_COLLISION_PENALTY,
                 failure_prone: bool = False) -> "RouteMetrics":
        """Build from a ``RunResult``; the initial speed is not part of the trace."""
        out = result.outcome
        stats = jerk_stats([(tk.t, tk.speed) for tk in result.trace], dt)
        cs, sp = composed_score(out.completion, out.collisions, penalty)
        return cls(
            scenario=result.scenario,
            collisions=out.collisions,
            distance_km=out.distance_km,
            completed=out.status == "completed",
            completion=out.completion,
            composed_score=cs,
            score_penalty=sp,
            mean_abs_jerk=None if stats is None else stats.mean_abs,
            std_abs_jerk=None if stats is None else stats.std_abs,
            max_jerk=None if stats is None else stats.max_abs,
            timed_out=out.status == "timeout",
            failure_prone=failure_prone,
            runtime_us=mean_timings(tk.timing_us for tk in result.trace),
        )


def mean_timings(streams: Iterable[Mapping[str, float]]) -> dict[str, float]:
    totals: dict[str, float] = {}
    counts: dict[str, int] = {}
    for rec in streams:
        for key, value in rec.items():
            totals[key] = totals.get(key, 0.0) + value
            counts[key] = counts.get(key, 0) + 1
    return {k: totals[k] / counts[k] for k in sorted(totals)}


# --- suite level ------------------------------------------------------------

def collision_metrics(routes: Sequence[RouteMetrics]) -> tuple[float, float | None]:
    """Return ``(CpR, CpK)``; CpK is ``None`` when no distance was driven."""
    if not routes:
        raise ValueError("need at least one route")
    total = sum(r.collisions for r in routes)
    km = math.fsum(r.distance_km for r in routes)
    return total / len(routes), (total / km if km > 0.0 else None)


def _mean_defined(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return math.fsum(vals) / len(vals) if vals else None


@dataclass(frozen=True)
class SuiteMetrics:
    label: str
    scenarios: tuple[str, ...]
    routes: int
    collisions: int
    distance_km: float
    CpR: float
    CpK: float | None
    CS: float
    SP: float
    MAJ: float | None
    SAJ: float | None
    MJ: float | None
    timeout_fraction: float

    @classmethod
    def from_routes(cls, label: str, routes: Sequence[RouteMetrics]) -> "SuiteMetrics":
        """Aggregate routes; jerk columns are means of the per-route statistics."""
        cpr, cpk = collision_metrics(routes)
        n = len(routes)
        return cls(
            label=label,
            scenarios=tuple(sorted(r.scenario for r in routes)),
            routes=n,
            collisions=sum(r.collisions for r in routes),
            distance_km=math.fsum(r.distance_km for r in routes),
            CpR=cpr,
            CpK=cpk,
            CS=math.fsum(r.composed_score for r in routes) / n,
            SP=math.fsum(r.score_penalty for r in routes) / n,
            MAJ=_mean_defined(r.mean_abs_jerk for r in routes),
            SAJ=_mean_defined(r.std_abs_jerk for r in routes),
            MJ=_mean_defined(r.max_jerk for r in routes),
            timeout_fraction=sum(r.timed_out for r in routes) / n,
        )


COMPARED = ("CpR", "CpK", "CS", "SP", "MAJ", "SAJ", "MJ")


def percent_delta(before: float | None, after: float | None) -> float | None:
    if before is None or after is None:
        return None
    if before == 0.0:
        return 0.0 if after == 0.0 else None
    return 100.0 * (after - before) / abs(before)


def _fmt(value: float | None, digits: int = 2) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


def _fmt_delta(value: float | None) -> str:
    return "n/a" if value is None else f"{value:+.1f}%"


@dataclass(frozen=True)
class Comparison:
    baseline: SuiteMetrics
    cri: SuiteMetrics

    @property
    def deltas(self) -> dict[str, float | None]:
        return {m: percent_delta(getattr(self.baseline, m), getattr(self.cri, m)) for m in COMPARED}

    def to_dict(self) -> dict:
        return {
            "baseline": asdict(self.baseline),
            "cri": asdict(self.cri),
            "delta_pct": self.deltas,
        }

    def to_text(self) -> str:
        header = ["", *COMPARED]
        rows = [
            [self.baseline.label, *(_fmt(getattr(self.baseline, m)) for m in COMPARED)],
            [self.cri.label, *(_fmt(getattr(self.cri, m)) for m in COMPARED)],
            ["delta", *(_fmt_delta(self.deltas[m]) for m in COMPARED)],
        ]
        return render_table(header, rows)


def compare_suites(baseline: SuiteMetrics, cri: SuiteMetrics) -> Comparison:
    if baseline.scenarios != cri.scenarios:
        missing = sorted(set(baseline.scenarios) ^ set(cri.scenarios))
        raise ComparisonError(f"suites cover different scenarios: {missing}")
    return Comparison(baseline, cri)


def render_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    cols = [header, *rows]
    widths = [max(len(str(r[i])) for r in cols) for i in range(len(header))]
    lines = []
    for r in cols:
        cells = [str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(r, widths))]
        lines.append("  ".join(cells).rstrip())
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def suite_table(suites: Sequence[SuiteMetrics]) -> str:
    """Plain-text summary table, one row per suite."""
    header = ["", "routes", "collisions", "km", *COMPARED]
    rows = [
        [s.label, str(s.routes), str(s.collisions), _fmt(s.distance_km, 3),
         *(_fmt(getattr(s, m)) for m in COMPARED)]
        for s in suites
    ]
    return render_table(header, rows)


# --- runtime ----------------------------------------------------------------

COMPONENT_ROWS = (
    ("cri_envelope", "Envelope Construction"),
    ("cri_risk", "Risk Assessment"),
    ("cri_fusion", "Sector Fusion"),
    ("cri_adaptation", "Control Adaptation"),
)


def overhead(baseline_ms: float, cri_ms: float) -> tuple[float, float]:
    """Absolute (ms) and relative (%) cost of adding CRI to a decision step."""
    if baseline_ms <= 0.0:
        raise ValueError("baseline runtime must be > 0")
    diff = cri_ms - baseline_ms
    return diff, 100.0 * diff / baseline_ms


@dataclass(frozen=True)
class RuntimeReport:
    components_ms: Mapping[str, float]
    baseline_ms: float
    cri_ms: float

    @property
    def overhead_ms(self) -> float:
        return overhead(self.baseline_ms, self.cri_ms)[0]

    @property
    def overhead_pct(self) -> float:
        return overhead(self.baseline_ms, self.cri_ms)[1]

    def rows(self) -> list[tuple[str, str]]:
        out = [(name, f"{ms:.3f}") for name, ms in self.components_ms.items()]
        out += [
            ("RunStep (Baseline)", f"{self.baseline_ms:.3f}"),
            ("RunStep (with CRI)", f"{self.cri_ms:.3f}"),
            ("Overhead", f"{self.overhead_ms:.3f}"),
            ("Overhead (%)", f"{self.overhead_pct:.2f}%"),
        ]
        return out

    def to_dict(self) -> dict:
        return {
            "components_ms": dict(self.components_ms),
            "baseline_ms": self.baseline_ms,
            "cri_ms": self.cri_ms,
            "overhead_ms": self.overhead_ms,
            "overhead_pct": self.overhead_pct,
        }

    def to_text(self) -> str:
        return render_table(["Component", "Mean Runtime (ms)"], self.rows())


def runtime_profile(pairs: Sequence[tuple]) -> RuntimeReport:
    """Overhead report built from paired ``(baseline, cri)`` runs."""
    if not pairs:
        raise PairingError("no runs to profile")
    base_steps: list[float] = []
    cri_steps: list[float] = []
    comp: list[Mapping[str, float]] = []
    for base, cri in pairs:
        if base.scenario != cri.scenario:
            raise PairingError(f"runs pair different scenarios: {base.scenario!r} vs {cri.scenario!r}")
        if base.cri_enabled or not cri.cri_enabled:
            raise PairingError(f"{base.scenario}: expected one baseline run and one CRI run")
        for tk in base.trace:
            base_steps.append(tk.timing_us["step"])
        for tk in cri.trace:
            cri_steps.append(tk.timing_us["step"])
            comp.append(tk.timing_us)
    if not base_steps or not cri_steps:
        raise PairingError("runs carry no timing samples")
    means = mean_timings(comp)
    return RuntimeReport(
        components_ms={label: means.get(key, 0.0) / 1e3 for key, label in COMPONENT_ROWS},
        baseline_ms=math.fsum(base_steps) / len(base_steps) / 1e3,
        cri_ms=math.fsum(cri_steps) / len(cri_steps) / 1e3,
    )


# --- plot export ------------------------------------------------------------

SERIES_COLUMNS = ("t", "speed", "cri_final", "dominant_sector", "mode", "throttle", "brake")


def series_csv(trace) -> str:
    """Per-tick columns for speed and risk panels, as comma-separated text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SERIES_COLUMNS)
    for tk in trace:
        w.writerow([f"{tk.t:.2f}", repr(tk.speed), repr(tk.cri_final), tk.dominant_sector,
                    tk.mode, repr(tk.throttle), repr(tk.brake)])
    return buf.getvalue()
