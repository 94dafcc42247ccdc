"""Logical attack graph: fact, exploit and privilege nodes, plus DOT export."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Mapping, Sequence

from .datalog import DerivationLog, GroundRuleInstance
from .errors import GoalUnrepresentable, UnknownNodeId
from .scenario import Atom, NetworkModel

if TYPE_CHECKING:
    from .temporal import IntervalState


class NodeKind(enum.Enum):
    FACT = "fact"
    EXPLOIT = "exploit"
    PRIVILEGE = "privilege"


_SHAPES = {NodeKind.FACT: "box", NodeKind.EXPLOIT: "ellipse", NodeKind.PRIVILEGE: "diamond"}


def fact_id(atom: Atom) -> str:
    return f"f:{atom}"


def privilege_id(atom: Atom) -> str:
    return f"p:{atom}"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    label: Atom | GroundRuleInstance


@dataclass(frozen=True)
class AttackGraph:
    nodes: tuple[Node, ...]
    edges: tuple[tuple[str, str], ...]
    goal_id: str | None = None

    @cached_property
    def by_id(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def predecessors(self) -> dict[str, tuple[str, ...]]:
        preds: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for src, dst in self.edges:
            preds[dst].append(src)
        return {k: tuple(v) for k, v in preds.items()}

    def count(self, kind: NodeKind) -> int:
        return sum(1 for n in self.nodes if n.kind is kind)


def atom_node_id(model: NetworkModel, atom: Atom) -> str:
    """Node id of ``atom``: base predicates are facts, derived ones privileges."""
    return fact_id(atom) if model.is_base_predicate(atom.predicate) else privilege_id(atom)


def build_graph(
    model: NetworkModel,
    logs: Sequence[DerivationLog],
    require_goal: bool = True,
) -> AttackGraph:
    """Union attack graph over all step logs.

    Every base fact that was ever active, every instance that ever fired and
    every atom ever produced by a rule appears exactly once. With
    ``require_goal`` false an unreachable goal leaves ``goal_id`` unset
    instead of raising.
    """
    nodes: dict[str, Node] = {}
    edges: set[tuple[str, str]] = set()

    for log in logs:
        for atom in log.facts:
            if model.is_base_predicate(atom.predicate):
                nodes.setdefault(fact_id(atom), Node(fact_id(atom), NodeKind.FACT, atom))
        for inst in log.instances:
            eid = inst.node_id
            nodes.setdefault(eid, Node(eid, NodeKind.EXPLOIT, inst))
            pid = privilege_id(inst.head)
            nodes.setdefault(pid, Node(pid, NodeKind.PRIVILEGE, inst.head))
            edges.add((eid, pid))
            for b in inst.body:
                edges.add((atom_node_id(model, b), eid))

    goal_id = atom_node_id(model, model.goal)
    if goal_id not in nodes:
        if require_goal:
            raise GoalUnrepresentable(f"goal {model.goal} is neither derived nor an active base fact")
        goal_id = None

    return AttackGraph(
        nodes=tuple(nodes[k] for k in sorted(nodes)),
        edges=tuple(sorted(edges)),
        goal_id=goal_id,
    )


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(
    graph: AttackGraph,
    states: IntervalState | Mapping[str, bool] | None = None,
    title: str | None = None,
) -> str:
    """Render ``graph`` as a DOT digraph.

    Facts are boxes, exploits ellipses, privileges diamonds. With ``states``
    each node is filled gray when on and white when off.
    """
    node_states: Mapping[str, bool] | None
    node_states = getattr(states, "node_states", states)
    if node_states is not None:
        unknown = sorted(set(node_states) - set(graph.by_id))
        if unknown:
            raise UnknownNodeId(f"state given for unknown node {unknown[0]!r}")
        missing = sorted(set(graph.by_id) - set(node_states))
        if missing:
            raise UnknownNodeId(f"no state given for node {missing[0]!r}")

    out = ["digraph attack_graph {"]
    if title is not None:
        out.append(f"  label={_quote(title)};")
        out.append("  labelloc=t;")
    out.append('  node [fontname="Helvetica"];')
    for node in graph.nodes:
        attrs = [f"shape={_SHAPES[node.kind]}", f"label={_quote(str(node.label))}"]
        if node_states is not None:
            fill = "gray" if node_states[node.id] else "white"
            attrs.append(f"style=filled, fillcolor={fill}")
        if node.id == graph.goal_id:
            attrs.append("peripheries=2")
        out.append(f"  {_quote(node.id)} [{', '.join(attrs)}];")
    for src, dst in graph.edges:
        out.append(f"  {_quote(src)} -> {_quote(dst)};")
    out.append("}")
    return "\n".join(out) + "\n"
