"""Command-line entry point: ``cri run|batch|compare|validate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

from cri import __version__
from cri.config import Config, ConfigError, load_config
from cri.metrics import (
    RouteMetrics,
    SuiteMetrics,
    compare_suites,
    render_table,
    runtime_profile,
    suite_table,
)
from cri.sim.runner import RunResult, run_scenario, write_trace
from cri.sim.scenario import Scenario, ScenarioError, load_directory, load_scenario, resolve_scenario

log = logging.getLogger("cri")


# --- report assembly ----------------------------------------------------------

@dataclass
class PairedRun:
    scenario: Scenario
    baseline: RunResult
    cri: RunResult


def run_pair(scenario: Scenario, config: Config) -> PairedRun:
    params = config.run_params()
    return PairedRun(scenario, run_scenario(scenario, False, params), run_scenario(scenario, True, params))


def _run_pair_job(args: tuple[Scenario, Config]) -> PairedRun:
    return run_pair(*args)


def run_pairs(scenarios: Sequence[Scenario], config: Config, parallel: int = 1) -> list[PairedRun]:
    jobs = [(s, config) for s in scenarios]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_run_pair_job, jobs))  # map keeps input order
    return [run_pair(*job) for job in jobs]


def _dt(scenario: Scenario, config: Config) -> float:
    return scenario.dt if scenario.dt is not None else config.sim.dt


def route_metrics(pairs: Sequence[PairedRun], config: Config) -> tuple[list[RouteMetrics], list[RouteMetrics]]:
    pen = config.metrics.collision_penalty
    base = [RouteMetrics.from_run(p.baseline, _dt(p.scenario, config), pen, p.scenario.failure_prone) for p in pairs]
    cri = [RouteMetrics.from_run(p.cri, _dt(p.scenario, config), pen, p.scenario.failure_prone) for p in pairs]
    return base, cri


@dataclass
class Report:
    header: str
    body: str
    runtime: str
    document: dict

    def text(self, with_runtime: bool = True) -> str:
        parts = [self.header, self.body]
        if with_runtime and self.runtime:
            parts.append(self.runtime)
        return "\n".join(parts)


def report_header(title: str, config: Config, scenarios: Sequence[Scenario], seed: int | None) -> str:
    lines = [
        f"# {title}",
        f"# cri {__version__}",
        f"# config-sha256: {config.digest()}",
        f"# config: {config.canonical_json()}",
        f"# scenarios: {len(scenarios)} (failure-prone: {sum(s.failure_prone for s in scenarios)})",
    ]
    if seed is not None:
        lines.append(f"# seed: {seed} (unused; the simulator is deterministic)")
    return "\n".join(lines) + "\n"


def _delta_lines(base: SuiteMetrics, cri: SuiteMetrics) -> list[str]:
    cmp = compare_suites(base, cri)
    cells = []
    for name, value in cmp.deltas.items():
        cells.append(f"{name} {'n/a' if value is None else f'{value:+.1f}%'}")
    return [f"delta {base.label.split('_', 1)[1]}: " + ", ".join(cells)]


def batch_report(pairs: Sequence[PairedRun], config: Config, fp_only: bool = False,
                 seed: int | None = None) -> Report:
    """Summary report with Baseline and CRI rows over all routes and over the FP subset."""
    scenarios = [p.scenario for p in pairs]
    base, cri = route_metrics(pairs, config)
    suites: list[SuiteMetrics] = []
    if not fp_only:
        suites += [SuiteMetrics.from_routes("Baseline_ALL", base), SuiteMetrics.from_routes("CRI_ALL", cri)]
    fp_idx = [i for i, s in enumerate(scenarios) if s.failure_prone]
    if fp_idx:
        suites += [
            SuiteMetrics.from_routes("Baseline_FP", [base[i] for i in fp_idx]),
            SuiteMetrics.from_routes("CRI_FP", [cri[i] for i in fp_idx]),
        ]

    body = [suite_table(suites)]
    for b, c in zip(suites[::2], suites[1::2]):
        body += _delta_lines(b, c)
    rows = [
        [p.scenario.name, "yes" if p.scenario.failure_prone else "no", str(b.collisions), str(c.collisions),
         f"{b.composed_score:.2f}", f"{c.composed_score:.2f}", p.baseline.outcome.status, p.cri.outcome.status]
        for p, b, c in zip(pairs, base, cri)
    ]
    body += ["", render_table(["scenario", "fp", "coll_base", "coll_cri", "CS_base", "CS_cri",
                               "status_base", "status_cri"], rows)]

    profile = runtime_profile([(p.baseline, p.cri) for p in pairs])
    runtime = "## runtime (excluded from the deterministic body)\n" + profile.to_text()
    doc = {
        "config_sha256": config.digest(),
        "config": config.to_dict(),
        "scenarios": [s.name for s in scenarios],
        "suites": [asdict(s) for s in suites],
        "deltas": {
            b.label.split("_", 1)[1]: compare_suites(b, c).deltas for b, c in zip(suites[::2], suites[1::2])
        },
        "routes": [
            {"scenario": p.scenario.name, "failure_prone": p.scenario.failure_prone,
             "baseline": p.baseline.outcome.to_dict(), "cri": p.cri.outcome.to_dict()}
            for p in pairs
        ],
        "runtime": profile.to_dict(),
    }
    title = "cri batch report" + (" (failure-prone only)" if fp_only else "")
    return Report(report_header(title, config, scenarios, seed), "\n".join(body), runtime, doc)


def summary_line(result: RunResult) -> str:
    o = result.outcome
    peak = max((tk.cri_final for tk in result.trace), default=0.0)
    return (f"{result.scenario}: cri={'on' if result.cri_enabled else 'off'} status={o.status} "
            f"collisions={o.collisions} distance_km={o.distance_km:.3f} completion={o.completion:.3f} "
            f"ticks={o.ticks} peak_cri={peak:.3f}")


# --- commands -------------------------------------------------------------------

def _config(args) -> Config:
    return load_config(args.config, args.set or ())


def cmd_run(args) -> int:
    config = _config(args)
    scenario = resolve_scenario(args.scenario)
    result = run_scenario(scenario, args.cri == "on", config.run_params(), monitor=args.monitor)
    if args.trace:
        write_trace(result.trace, args.trace, with_timing=config.trace.timing)
    print(summary_line(result))
    for ev in result.outcome.events:
        print(f"  collision t={ev.t:.2f} npc={ev.npc_id}")
    return 0


def _select(scenarios: list[Scenario], mode: str) -> list[Scenario]:
    return [s for s in scenarios if s.failure_prone] if mode == "fp" else scenarios


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_batch(args) -> int:
    config = _config(args)
    scenarios = sorted(_select(load_directory(args.directory), args.filter), key=lambda s: s.name)
    if not scenarios:
        raise ScenarioError(args.directory, f"no scenarios match filter {args.filter!r}")
    pairs = run_pairs(scenarios, config, args.parallel)
    report = batch_report(pairs, config, fp_only=args.filter == "fp", seed=args.seed)
    if args.json:
        Path(args.json).write_text(json.dumps(report.document, indent=2, sort_keys=True) + "\n")
    _emit(report.text(with_runtime=not args.no_runtime), args.out)
    return 0


def cmd_compare(args) -> int:
    config = _config(args)
    scenarios = sorted((resolve_scenario(ref) for ref in args.scenarios), key=lambda s: s.name)
    pairs = run_pairs(scenarios, config, args.parallel)
    base, cri = route_metrics(pairs, config)
    cmp = compare_suites(SuiteMetrics.from_routes("Baseline", base), SuiteMetrics.from_routes("CRI", cri))
    profile = runtime_profile([(p.baseline, p.cri) for p in pairs])
    text = report_header("cri comparison", config, scenarios, args.seed) + "\n" + cmp.to_text()
    text += "\n## runtime\n" + profile.to_text()
    _emit(text, args.out)
    return 0


def cmd_validate(args) -> int:
    failures = 0
    if args.config or args.set:
        try:
            config = _config(args)
            print(f"config ok: sha256 {config.digest()}")
        except (ConfigError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            failures += 1
    for ref in args.paths:
        path = Path(ref)
        files = sorted(p for p in path.iterdir() if p.suffix in (".scn", ".json")) if path.is_dir() else [path]
        for f in files:
            try:
                sc = load_scenario(f)
                print(f"ok: {f} ({sc.name}, {len(sc.npcs)} npcs{', fp' if sc.failure_prone else ''})")
            except (ScenarioError, OSError) as exc:
                print(f"invalid: {exc}", file=sys.stderr)
                failures += 1
    return 0 if failures == 0 else 2


# --- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (overrides defaults)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config value; repeatable; wins over --config")
    common.add_argument("--seed", type=int, help="reserved; the simulator is deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cri", description="Directional collision-risk index toolkit.")
    p.add_argument("--version", action="version", version=f"cri {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="simulate one scenario")
    r.add_argument("scenario", help="scenario file or built-in scenario name")
    r.add_argument("--cri", choices=("on", "off"), default="on")
    r.add_argument("--trace", help="write a per-tick JSON-lines trace here")
    r.add_argument("--monitor", action="store_true", help="with --cri off, still log the risk field")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", parents=[common], help="run a scenario directory with CRI off and on")
    b.add_argument("directory")
    b.add_argument("--filter", choices=("all", "fp"), default="all")
    b.add_argument("--parallel", type=int, default=1)
    b.add_argument("--out", help="write the text report here instead of stdout")
    b.add_argument("--json", help="also write the machine-readable report here")
    b.add_argument("--no-runtime", action="store_true", help="omit the timing section")
    b.set_defaults(func=cmd_batch)

    c = sub.add_parser("compare", parents=[common], help="baseline versus CRI on selected scenarios")
    c.add_argument("scenarios", nargs="+")
    c.add_argument("--parallel", type=int, default=1)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    v = sub.add_parser("validate", parents=[common], help="check scenario files and configuration")
    v.add_argument("paths", nargs="*")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "parallel", 1) < 1:
        print("error: --parallel must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
