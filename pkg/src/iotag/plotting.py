"""Matplotlib figures written next to the CLI's text/JSON reports."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.colors import ListedColormap
from matplotlib.figure import Figure

from .analysis import RiskScore
from .graph import NodeKind
from .optimize import DeploymentReport
from .temporal import ReachabilityResult

_KIND_ORDER = {NodeKind.FACT: 0, NodeKind.EXPLOIT: 1, NodeKind.PRIVILEGE: 2}
_ONOFF = ListedColormap(["white", "0.55"])
# fixed metadata keeps PNG bytes stable between runs
_PNG_META = {"Software": None}


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight", metadata=_PNG_META if path.suffix == ".png" else None)
    return path


def plot_node_timeline(result: ReachabilityResult, path: str | Path) -> Path:
    """On/off grid: one row per graph node, one column per evaluated step."""
    nodes = sorted(result.graph.nodes, key=lambda n: (_KIND_ORDER[n.kind], n.id))
    grid = np.array(
        [[state.node_states[n.id] for state in result.per_step_states] for n in nodes],
        dtype=float,
    ).reshape(len(nodes), result.steps_evaluated)

    height = max(2.0, 0.22 * len(nodes) + 1.2)
    fig = Figure(figsize=(2.0 + 1.1 * result.steps_evaluated, height))
    ax = fig.add_subplot()
    ax.imshow(grid, aspect="auto", cmap=_ONOFF, vmin=0, vmax=1, interpolation="nearest")
    ax.set_xticks(range(result.steps_evaluated))
    ax.set_xticklabels([f"{s.step}\n{s.interval}" for s in result.per_step_states], fontsize=8)
    ax.set_yticks(range(len(nodes)))
    ax.set_yticklabels([n.id for n in nodes], fontsize=6)
    for y, n in enumerate(nodes):
        if n.id == result.graph.goal_id:
            ax.get_yticklabels()[y].set_fontweight("bold")
    ax.set_xticks(np.arange(-0.5, result.steps_evaluated, 1), minor=True)
    ax.set_yticks(np.arange(-0.5, len(nodes), 1), minor=True)
    ax.grid(which="minor", color="0.8", linewidth=0.5)
    ax.tick_params(which="minor", length=0)
    placement = ", ".join(f"{d}={z}" for d, z in sorted(result.placement.items()))
    ax.set_title(f"node states per step{f' ({placement})' if placement else ''}", fontsize=9)
    return _save(fig, path)


def _fmt_score(s: RiskScore) -> str:
    d = s.as_dict()
    if not d["reached"]:
        return "unreached"
    return f"step {d['earliest_step']}, {d['proof_count']} proofs, cost {d['min_cost']}"


def plot_deployment_risk(report: DeploymentReport, path: str | Path) -> Path:
    """Earliest compromise step and proof count for every placement, safest first."""
    labels = [", ".join(f"{d}={z}" for d, z in p.items()) for p, _ in report.assignments]
    scores = [s for _, s in report.assignments]
    horizon = max([s.earliest_step for s in scores if s.reached] + [0]) + 1
    earliest = [s.earliest_step if s.reached else horizon for s in scores]
    counts = [s.proof_count for s in scores]
    y = np.arange(len(labels))

    fig = Figure(figsize=(8.0, max(2.0, 0.35 * len(labels) + 1.2)))
    ax1, ax2 = fig.subplots(1, 2, sharey=True)
    colors = ["0.3" if s.reached else "0.85" for s in scores]
    ax1.barh(y, earliest, color=colors, edgecolor="black", linewidth=0.5)
    ax1.set_xlabel("earliest compromise step (light: unreached)")
    ax1.set_yticks(y)
    ax1.set_yticklabels(labels, fontsize=8)
    ax1.invert_yaxis()
    ax2.barh(y, counts, color=colors, edgecolor="black", linewidth=0.5)
    ax2.set_xlabel("minimal proofs")
    for yi, s in zip(y, scores):
        ax2.annotate(_fmt_score(s), (0, yi), xytext=(3, 0), textcoords="offset points",
                     va="center", fontsize=7)
    fig.suptitle(f"{report.total_evaluated} placements, safest first", fontsize=9)
    return _save(fig, path)
