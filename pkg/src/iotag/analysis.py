"""Attack-proof enumeration and risk scoring.

A proof is a set of (rule instance, step) firings that, replayed on their
own, derive the goal. Proofs are subset-minimal. They are computed as
antichains of firing sets over the time-expanded AND-OR graph: an atom at a
step is supported by any instance producing it at that step, or, for
persistent predicates, at an earlier step; an instance needs support for
every rule-derived body atom at its own step.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .datalog import GroundRuleInstance
from .graph import AttackGraph, fact_id
from .scenario import Atom
from .temporal import ReachabilityResult, placement_facts

DEFAULT_K = 100
INF = math.inf

Firing = tuple[GroundRuleInstance, int]


@dataclass(frozen=True)
class AttackProof:
    exploit_instances: frozenset[Firing]
    facts_used: frozenset[tuple[str, int]]
    cost: float
    depth: int

    @property
    def steps(self) -> list[Firing]:
        """Firings sorted by step, then instance id."""
        return sorted(self.exploit_instances, key=lambda f: (f[1], f[0].node_id))

    @property
    def ids(self) -> list[str]:
        return [f"{inst.node_id}@{step}" for inst, step in self.steps]

    def sort_key(self) -> tuple:
        return (self.cost, self.depth, self.ids)


def _minimize(family: Iterable[frozenset]) -> frozenset[frozenset]:
    kept: list[frozenset] = []
    for s in sorted(set(family), key=len):
        if not any(k <= s for k in kept):
            kept.append(s)
    return frozenset(kept)


def _proof_families(result: ReachabilityResult) -> frozenset[frozenset[Firing]]:
    model = result.model
    goal = model.goal
    persistent = model.persistent_predicates

    if model.is_base_predicate(goal.predicate):
        base_steps = [s for s, log in enumerate(result.logs) if goal in log.facts]
        return frozenset([frozenset()]) if base_steps else frozenset()

    # producers[(atom, step)] -> firings that make atom available at step
    producers: dict[tuple[Atom, int], list[Firing]] = {}
    firings: list[Firing] = []
    by_head: dict[Atom, list[Firing]] = {}
    for step, log in enumerate(result.logs):
        for inst in log.instances:
            firings.append((inst, step))
            by_head.setdefault(inst.head, []).append((inst, step))
    for step, log in enumerate(result.logs):
        for atom in log.derived:
            if model.is_base_predicate(atom.predicate):
                continue
            producers[(atom, step)] = [
                (inst, s)
                for inst, s in by_head.get(atom, ())
                if s == step or (s < step and atom.predicate in persistent)
            ]

    atom_fam: dict[tuple[Atom, int], frozenset[frozenset[Firing]]] = {k: frozenset() for k in producers}
    inst_fam: dict[Firing, frozenset[frozenset[Firing]]] = {f: frozenset() for f in firings}

    def needs(firing: Firing) -> list[tuple[Atom, int]]:
        inst, step = firing
        return [(b, step) for b in dict.fromkeys(inst.body) if not model.is_base_predicate(b.predicate)]

    changed = True
    while changed:
        changed = False
        for f in firings:
            parts = [atom_fam[k] for k in needs(f)]
            if any(not p for p in parts):
                continue
            combos = (frozenset({f}).union(*choice) for choice in itertools.product(*parts))
            fam = _minimize(itertools.chain(inst_fam[f], combos))
            if fam != inst_fam[f]:
                inst_fam[f] = fam
                changed = True
        for key, prods in producers.items():
            fam = _minimize(itertools.chain(atom_fam[key], *(inst_fam[p] for p in prods)))
            if fam != atom_fam[key]:
                atom_fam[key] = fam
                changed = True

    goal_keys = [(goal, s) for s in range(len(result.logs)) if (goal, s) in producers]
    return _minimize(itertools.chain.from_iterable(atom_fam[k] for k in goal_keys))


def _facts_used(result: ReachabilityResult, firings: frozenset[Firing]) -> frozenset[tuple[str, int]]:
    model = result.model
    used = set()
    for inst, step in firings:
        for b in inst.body:
            if model.is_base_predicate(b.predicate):
                used.add((fact_id(b), step))
    if not firings and model.is_base_predicate(model.goal.predicate):
        first = next(s for s, log in enumerate(result.logs) if model.goal in log.facts)
        used.add((fact_id(model.goal), first))
    return frozenset(used)


def _to_proof(result: ReachabilityResult, firings: frozenset[Firing]) -> AttackProof:
    facts = _facts_used(result, firings)
    steps = {s for _, s in firings} | {s for _, s in facts}
    return AttackProof(
        exploit_instances=firings,
        facts_used=facts,
        cost=sum(inst.cost for inst, _ in firings),
        depth=len(steps),
    )


def enumerate_proofs(
    result: ReachabilityResult,
    graph: AttackGraph | None = None,
    k: int = DEFAULT_K,
) -> list[AttackProof]:
    """Up to ``k`` minimal proofs of the goal, cheapest first.

    Ties are broken by the number of steps spanned, then by the sorted list
    of firing ids. ``graph`` defaults to ``result.graph``.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    del graph  # the time-expanded structure is rebuilt from result.logs
    if not result.reached:
        return []
    proofs = [_to_proof(result, fam) for fam in _proof_families(result)]
    proofs.sort(key=AttackProof.sort_key)
    return proofs[:k]


def replay_proof(result: ReachabilityResult, proof: AttackProof) -> bool:
    """Fire only the proof's instances, step by step; True if the goal appears."""
    model = result.model
    facts = set(proof.facts_used)
    by_step: dict[int, list[GroundRuleInstance]] = {}
    for inst, step in proof.exploit_instances:
        by_step.setdefault(step, []).append(inst)
    horizon = max([s for _, s in facts] + list(by_step) + [0]) + 1
    carried: set[Atom] = set()
    placed = placement_facts(model, result.placement)

    def holds(atom: Atom, step: int, known: set[Atom]) -> bool:
        if model.is_base_predicate(atom.predicate):
            interval = model.interval_at(step).name
            active = atom in placed or atom in model.facts_active_in(interval)
            return active and (fact_id(atom), step) in facts
        return atom in known

    for step in range(horizon):
        known = set(carried)
        if holds(model.goal, step, known):
            return True
        pending = list(by_step.get(step, ()))
        progress = True
        while progress:
            progress = False
            for inst in list(pending):
                if all(holds(b, step, known) for b in inst.body):
                    known.add(inst.head)
                    pending.remove(inst)
                    progress = True
        if model.goal in known:
            return True
        carried |= {a for a in known if a.predicate in model.persistent_predicates}
    return False


@functools.total_ordering
@dataclass(frozen=True)
class RiskScore:
    """Risk of one evaluation. Ordering: ``a < b`` means ``a`` is safer.

    Riskier means: goal reached, then earlier compromise, then more proofs,
    then a cheaper cheapest proof.
    """

    reached: int
    earliest_step: float
    proof_count: int
    min_cost: float

    def _key(self) -> tuple:
        # ascending key == safest first
        return (self.reached, -self.earliest_step, self.proof_count, -self.min_cost)

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, RiskScore):
            return NotImplemented
        return self._key() < other._key()

    def as_dict(self) -> dict:
        return {
            "reached": self.reached,
            "earliest_step": None if self.earliest_step == INF else int(self.earliest_step),
            "proof_count": self.proof_count,
            "min_cost": None if self.min_cost == INF else self.min_cost,
        }

    def __str__(self) -> str:
        d = self.as_dict()
        return " ".join(f"{k}={'inf' if v is None else v}" for k, v in d.items())


UNREACHED = RiskScore(0, INF, 0, INF)


def score(result: ReachabilityResult, proofs: Sequence[AttackProof], k: int = DEFAULT_K) -> RiskScore:
    if not result.reached:
        return UNREACHED
    assert result.earliest_step is not None
    return RiskScore(
        reached=1,
        earliest_step=result.earliest_step,
        proof_count=min(len(proofs), k),
        min_cost=min((p.cost for p in proofs), default=INF),
    )
