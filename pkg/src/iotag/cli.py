"""Command line interface: ``check``, ``analyze``, ``optimize``, ``export-dot``.

Exit codes: 0 success (a reached goal is a finding, not a failure), 2 usage
error, 3 parse or validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .analysis import DEFAULT_K, AttackProof, RiskScore, enumerate_proofs, score
from .errors import IoTAGError, PlacementError, ScenarioError, StepOutOfRange
from .graph import export_dot
from .optimize import DEFAULT_LIMIT, DeploymentReport, optimize_deployment
from .scenario import NetworkModel, parse_scenario, validate_model
from .temporal import ReachabilityResult, evaluate_schedule, states_at

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3

COMMANDS = ("check", "analyze", "optimize", "export-dot")


class UsageError(IoTAGError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    scenario_path: str
    placement_overrides: dict[str, str] = field(default_factory=dict)
    k: int = DEFAULT_K
    max_steps: int | None = None
    output_path: str | None = None
    format: str = "text"
    step: int | None = None
    workers: int = 1
    limit: int = DEFAULT_LIMIT
    figure_path: str | None = None

    def problems(self) -> list[str]:
        out = []
        if self.command not in COMMANDS:
            out.append(f"unknown command {self.command!r}")
        if self.placement_overrides and self.command not in ("analyze", "export-dot"):
            out.append("--place is only valid for analyze and export-dot")
        if self.k < 1:
            out.append("-k must be at least 1")
        if self.max_steps is not None and self.max_steps < 1:
            out.append("--max-steps must be at least 1")
        if self.format not in ("text", "json"):
            out.append(f"unknown format {self.format!r}")
        if self.workers < 1:
            out.append("--workers must be at least 1")
        return out


@dataclass(frozen=True)
class RunOutcome:
    status: int
    output: str = ""
    errors: str = ""


# --------------------------------------------------------------------------
# rendering


def _dumps(obj: object) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _placement_str(placement: dict[str, str]) -> str:
    return ", ".join(f"{d}={z}" for d, z in sorted(placement.items())) or "-"


def _proof_dict(proof: AttackProof) -> dict:
    return {
        "cost": proof.cost,
        "depth": proof.depth,
        "instances": [{"step": s, "id": inst.node_id} for inst, s in proof.steps],
        "facts": [{"step": s, "id": fid} for fid, s in sorted(proof.facts_used, key=lambda x: (x[1], x[0]))],
    }


def render_analysis(
    path: str, result: ReachabilityResult, proofs: list[AttackProof], risk: RiskScore, k: int, fmt: str
) -> str:
    model = result.model
    goal_id = result.graph.goal_id
    if fmt == "json":
        return _dumps(
            {
                "schema": "iotag.analyze/1",
                "scenario": path,
                "goal": str(model.goal),
                "placement": dict(sorted(result.placement.items())),
                "reached": result.reached,
                "earliest_step": result.earliest_step,
                "steps_evaluated": result.steps_evaluated,
                "terminated_by": result.terminated_by,
                "steps": [
                    {
                        "step": st.step,
                        "interval": st.interval,
                        "goal_on": bool(goal_id and st.node_states[goal_id]),
                        "carried": sorted(str(a) for a in st.carried),
                        "on_nodes": st.on(),
                    }
                    for st in result.per_step_states
                ],
                "k": k,
                "proofs": [_proof_dict(p) for p in proofs],
                "risk": risk.as_dict(),
            }
        )

    lines = [
        f"scenario: {path}",
        f"goal: {model.goal}",
        f"placement: {_placement_str(dict(result.placement))}",
    ]
    if result.reached:
        iv = model.interval_at(result.earliest_step or 0).name
        lines.append(f"reached: yes, earliest step {result.earliest_step} ({iv})")
    else:
        lines.append("reached: no")
    lines.append(f"steps evaluated: {result.steps_evaluated} (stopped: {result.terminated_by})")
    lines.append(f"risk: {risk}")
    lines.append("")
    lines.append("steps:")
    width = max(len(n) for n in model.interval_names)
    for st in result.per_step_states:
        on = bool(goal_id and st.node_states[goal_id])
        carried = ", ".join(sorted(str(a) for a in st.carried)) or "-"
        lines.append(f"  {st.step:>3} {st.interval:<{width}}  goal {'ON ' if on else 'OFF'}  carried: {carried}")
    lines.append("")
    lines.append(f"proofs: {len(proofs)} (k={k})")
    for i, p in enumerate(proofs, start=1):
        lines.append(f"  [{i}] cost={p.cost} depth={p.depth}")
        for inst, s in p.steps:
            lines.append(f"      step {s}  {inst}")
    return "\n".join(lines) + "\n"


def render_optimize(path: str, report: DeploymentReport, k: int, fmt: str) -> str:
    if fmt == "json":
        return _dumps(
            {
                "schema": "iotag.optimize/1",
                "scenario": path,
                "k": k,
                "total_evaluated": report.total_evaluated,
                "best": dict(report.best),
                "best_risk": report.best_score.as_dict(),
                "assignments": [
                    {"placement": dict(p), "risk": s.as_dict()} for p, s in report.assignments
                ],
            }
        )
    lines = [
        f"scenario: {path}",
        f"placements evaluated: {report.total_evaluated}",
        f"best: {_placement_str(dict(report.best))}",
        f"best risk: {report.best_score}",
        "",
        "ranking (safest first):",
    ]
    for i, (p, s) in enumerate(report.assignments, start=1):
        lines.append(f"  {i:>3}. {_placement_str(dict(p))}  {s}")
    return "\n".join(lines) + "\n"


def render_check(path: str, diagnostics: list, fmt: str) -> str:
    if fmt == "json":
        return _dumps(
            {
                "schema": "iotag.check/1",
                "scenario": path,
                "diagnostics": [
                    {"code": d.code, "entity": d.entity, "message": d.message} for d in diagnostics
                ],
            }
        )
    if not diagnostics:
        return f"{path}: ok\n"
    return "".join(f"{path}: {d}\n" for d in diagnostics)


# --------------------------------------------------------------------------
# running


def _load(path: str) -> NetworkModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    return parse_scenario(text)


def _analyze(config: RunConfig, model: NetworkModel) -> ReachabilityResult:
    return evaluate_schedule(model, config.placement_overrides, max_steps=config.max_steps)


def run(config: RunConfig) -> RunOutcome:
    """Execute one command; never raises for expected failures."""
    problems = config.problems()
    if problems:
        return RunOutcome(EXIT_USAGE, errors="".join(f"error: {p}\n" for p in problems))
    path = config.scenario_path
    try:
        model = _load(path)
        diagnostics = validate_model(model)
        if config.command == "check":
            status = EXIT_OK if not diagnostics else EXIT_INVALID
            return RunOutcome(status, output=render_check(path, diagnostics, config.format))
        if diagnostics:
            return RunOutcome(EXIT_INVALID, errors=render_check(path, diagnostics, "text"))

        if config.command == "analyze":
            result = _analyze(config, model)
            proofs = enumerate_proofs(result, result.graph, config.k)
            risk = score(result, proofs, config.k)
            if config.figure_path:
                from .plotting import plot_node_timeline

                plot_node_timeline(result, config.figure_path)
            return RunOutcome(EXIT_OK, output=render_analysis(path, result, proofs, risk, config.k, config.format))

        if config.command == "optimize":
            report = optimize_deployment(model, k=config.k, limit=config.limit, workers=config.workers)
            if config.figure_path:
                from .plotting import plot_deployment_risk

                plot_deployment_risk(report, config.figure_path)
            return RunOutcome(EXIT_OK, output=render_optimize(path, report, config.k, config.format))

        # export-dot
        result = _analyze(config, model)
        if config.step is not None:
            step = config.step
        else:
            step = result.earliest_step if result.earliest_step is not None else 0
        state = states_at(result, step)
        title = f"step {state.step} ({state.interval})"
        return RunOutcome(EXIT_OK, output=export_dot(result.graph, state, title=title))

    except ScenarioError as exc:
        return RunOutcome(EXIT_INVALID, errors=f"{path}:{exc.line}:{exc.column}: {exc.message}\n")
    except (UsageError, PlacementError, StepOutOfRange) as exc:
        return RunOutcome(EXIT_USAGE, errors=f"error: {exc}\n")
    except IoTAGError as exc:
        return RunOutcome(EXIT_USAGE, errors=f"error: {exc}\n")


def _placement_arg(text: str) -> tuple[str, str]:
    device, sep, zone = text.partition("=")
    if not sep or not device or not zone:
        raise argparse.ArgumentTypeError(f"expected DEVICE=ZONE, got {text!r}")
    return device.strip(), zone.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iotag",
        description="Temporal attack-graph analysis for networks with mobile IoT devices.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", help="scenario file")
        p.add_argument("-o", "--output", help="write the report here instead of stdout")

    p = sub.add_parser("check", help="parse and validate a scenario")
    common(p)
    p.add_argument("--format", choices=("text", "json"), default="text")

    for name, helptext in (
        ("analyze", "reachability, proofs and risk for one placement"),
        ("export-dot", "DOT rendering of the attack graph at one step"),
    ):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--place", action="append", type=_placement_arg, default=[],
                       metavar="DEVICE=ZONE", help="placement of a deployable device (repeatable)")
        p.add_argument("--max-steps", type=int, help="cap on evaluated steps")
        if name == "analyze":
            p.add_argument("-k", type=int, default=DEFAULT_K, help="proof bound (default %(default)s)")
            p.add_argument("--format", choices=("text", "json"), default="text")
            p.add_argument("--figure", help="also render the per-step node states to this image file")
        else:
            p.add_argument("--step", type=int, help="step to color (default: earliest compromise, else 0)")

    p = sub.add_parser("optimize", help="rank every placement of the deployable devices")
    common(p)
    p.add_argument("-k", type=int, default=DEFAULT_K, help="proof bound (default %(default)s)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--limit", type=int, default=DEFAULT_LIMIT, help="maximum placements to enumerate")
    p.add_argument("--figure", help="also render the placement ranking to this image file")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    placement: dict[str, str] = {}
    for device, zone in getattr(args, "place", []):
        placement[device] = zone
    return RunConfig(
        command=args.command,
        scenario_path=args.scenario,
        placement_overrides=placement,
        k=getattr(args, "k", DEFAULT_K),
        max_steps=getattr(args, "max_steps", None),
        output_path=args.output,
        format=getattr(args, "format", "text"),
        step=getattr(args, "step", None),
        workers=getattr(args, "workers", 1),
        limit=getattr(args, "limit", DEFAULT_LIMIT),
        figure_path=getattr(args, "figure", None),
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    outcome = run(config)
    if outcome.errors:
        sys.stderr.write(outcome.errors)
    if outcome.output:
        if config.output_path:
            Path(config.output_path).write_text(outcome.output, encoding="utf-8")
        else:
            sys.stdout.write(outcome.output)
    return outcome.status


if __name__ == "__main__":
    sys.exit(main())
