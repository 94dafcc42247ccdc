"""Temporal evaluation over a cyclic interval schedule.

Each step runs the fixpoint over the facts of its interval, the placement
facts, and the persistent atoms carried over from earlier steps. Atoms of
predicates declared ``persistent`` are carried forward; everything else is
recomputed from scratch at the next step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .datalog import DerivationLog, fixpoint
from .errors import IncompletePlacement, InvalidZone, StepOutOfRange
from .graph import AttackGraph, NodeKind, build_graph
from .scenario import Atom, NetworkModel


@dataclass(frozen=True)
class IntervalState:
    step: int
    interval: str
    node_states: Mapping[str, bool]
    carried: frozenset[Atom]

    def on(self) -> list[str]:
        return [k for k, v in self.node_states.items() if v]


@dataclass(frozen=True)
class ReachabilityResult:
    reached: bool
    earliest_step: int | None
    steps_evaluated: int
    per_step_states: tuple[IntervalState, ...]
    logs: tuple[DerivationLog, ...]
    graph: AttackGraph
    model: NetworkModel
    placement: Mapping[str, str]
    terminated_by: str  # "goal", "fixpoint" or "max_steps"

    @property
    def interval_names(self) -> tuple[str, ...]:
        return tuple(s.interval for s in self.per_step_states)


def placement_facts(model: NetworkModel, placement: Mapping[str, str]) -> frozenset[Atom]:
    """Validate ``placement`` and return its ``placed(device, zone)`` atoms."""
    for device in placement:
        if model.deployment_var(device) is None:
            raise InvalidZone(f"{device!r} is not a deployable device")
    atoms = set()
    for dv in model.deployment_vars:
        if dv.device not in placement:
            raise IncompletePlacement(f"no zone given for device {dv.device!r}")
        zone = placement[dv.device]
        if zone not in dv.candidates:
            raise InvalidZone(
                f"zone {zone!r} is not a candidate for {dv.device!r} "
                f"(candidates: {', '.join(dv.candidates)})"
            )
        atoms.add(dv.atom(zone))
    return frozenset(atoms)


def persistent_atom_bound(model: NetworkModel) -> int:
    """Number of ground atoms any persistent predicate could ever take."""
    arity = model.arities()
    n_const = len(model.constants)
    return sum(n_const ** arity[p] for p in model.persistent_predicates if p in arity)


def step_bound(model: NetworkModel) -> int:
    return (persistent_atom_bound(model) + 1) * len(model.schedule)


def evaluate_schedule(
    model: NetworkModel,
    placement: Mapping[str, str] | None = None,
    max_steps: int | None = None,
) -> ReachabilityResult:
    """Walk the cyclic schedule until the goal is reached or nothing changes.

    The walk always covers at least one full cycle so every interval has a
    recorded state; after that it stops at the first step deriving the goal,
    or once the carried set has been unchanged for a whole cycle.
    ``max_steps`` caps the walk (default: the termination bound).
    """
    placement = dict(placement or {})
    placed = placement_facts(model, placement)
    n = len(model.schedule)
    limit = step_bound(model) if max_steps is None else max_steps

    logs: list[DerivationLog] = []
    carried_in: list[frozenset[Atom]] = []
    carried: frozenset[Atom] = frozenset()
    earliest: int | None = None
    unchanged = 0
    terminated_by = "max_steps"

    for step in range(limit):
        interval = model.interval_at(step).name
        active = model.facts_active_in(interval) | placed | carried
        log = fixpoint(active, model.rules)
        logs.append(log)
        carried_in.append(carried)
        new_carried = carried | {a for a in log.derived if a.predicate in model.persistent_predicates}
        unchanged = unchanged + 1 if new_carried == carried else 0
        carried = new_carried
        if earliest is None and model.goal in log.derived:
            earliest = step
        if earliest is not None and step >= n - 1:
            terminated_by = "goal"
            break
        if earliest is None and unchanged >= n:
            terminated_by = "fixpoint"
            break

    graph = build_graph(model, logs, require_goal=False)
    states = tuple(
        _states_for(model, graph, step, log, placed, carried_in[step])
        for step, log in enumerate(logs)
    )
    return ReachabilityResult(
        reached=earliest is not None,
        earliest_step=earliest,
        steps_evaluated=len(logs),
        per_step_states=states,
        logs=tuple(logs),
        graph=graph,
        model=model,
        placement=placement,
        terminated_by=terminated_by,
    )


def _states_for(
    model: NetworkModel,
    graph: AttackGraph,
    step: int,
    log: DerivationLog,
    placed: frozenset[Atom],
    carried: frozenset[Atom],
) -> IntervalState:
    interval = model.interval_at(step).name
    base = model.facts_active_in(interval) | placed
    states: dict[str, bool] = {}
    # facts and privileges first; exploits read their predecessors' states
    for node in graph.nodes:
        if node.kind is NodeKind.FACT:
            states[node.id] = node.label in base
        elif node.kind is NodeKind.PRIVILEGE:
            states[node.id] = node.label in log.derived or node.label in carried
    preds = graph.predecessors
    for node in graph.nodes:
        if node.kind is NodeKind.EXPLOIT:
            states[node.id] = all(states[p] for p in preds[node.id])
    return IntervalState(
        step=step,
        interval=interval,
        node_states={k: states[k] for k in sorted(states)},
        carried=carried,
    )


def states_at(result: ReachabilityResult, step: int) -> IntervalState:
    if not 0 <= step < result.steps_evaluated:
        raise StepOutOfRange(f"step {step} outside 0..{result.steps_evaluated - 1}")
    return result.per_step_states[step]


def check_state(result: ReachabilityResult, state: IntervalState) -> list[str]:
    """Re-check the on/off invariants of ``state``; returns violations."""
    model, graph = result.model, result.graph
    log = result.logs[state.step]
    placed = placement_facts(model, result.placement)
    base = model.facts_active_in(state.interval) | placed
    fired = {inst.node_id for inst in log.instances}
    problems: list[str] = []
    if state.interval != model.interval_at(state.step).name:
        problems.append(f"step {state.step} labelled with wrong interval {state.interval!r}")
    for atom in state.carried:
        if atom.predicate not in model.persistent_predicates:
            problems.append(f"carried atom {atom} is not persistent")
    for node in graph.nodes:
        on = state.node_states[node.id]
        if node.kind is NodeKind.FACT:
            expected = node.label in base
        elif node.kind is NodeKind.PRIVILEGE:
            expected = node.label in log.derived or node.label in state.carried
        else:
            expected = all(state.node_states[p] for p in graph.predecessors[node.id])
            if expected != (node.id in fired):
                problems.append(f"{node.id}: predecessor states disagree with the fixpoint log")
        if on != expected:
            problems.append(f"{node.id}: recorded {'ON' if on else 'OFF'} at step {state.step}")
    return problems
