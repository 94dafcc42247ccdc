"""Bottom-up Horn-clause evaluation with a full derivation record.

Semi-naive: each round only joins rule bodies that touch at least one atom
derived in the previous round. Every ground rule instance that fires is
logged (once per rule + substitution) so the proof structure can be rebuilt
as an AND-OR graph afterwards.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import NotDerived
from .scenario import Atom, Rule, is_variable


@dataclass(frozen=True)
class GroundRuleInstance:
    rule_name: str
    substitution: tuple[tuple[str, str], ...]
    head: Atom
    body: tuple[Atom, ...]
    cost: float = 1

    @property
    def binding(self) -> dict[str, str]:
        return dict(self.substitution)

    @property
    def node_id(self) -> str:
        subst = ",".join(f"{v}={c}" for v, c in self.substitution)
        return f"e:{self.rule_name}{{{subst}}}"

    def __str__(self) -> str:
        return self.node_id[2:]


def instantiate(rule: Rule, binding: Mapping[str, str]) -> GroundRuleInstance:
    return GroundRuleInstance(
        rule_name=rule.name,
        substitution=tuple(sorted((v, binding[v]) for v in rule.variables)),
        head=rule.head.substitute(binding),
        body=tuple(a.substitute(binding) for a in rule.body),
        cost=rule.cost,
    )


@dataclass(frozen=True)
class DerivationLog:
    """Result of one fixpoint run.

    ``facts`` is the active input, ``derived`` the least model (it includes
    ``facts``), ``instances`` the fired rule instances in firing order and
    ``supports`` maps every rule-produced atom to the indices of the
    instances producing it.
    """

    facts: frozenset[Atom]
    derived: frozenset[Atom]
    instances: tuple[GroundRuleInstance, ...]
    supports: Mapping[Atom, tuple[int, ...]]


def _match(pattern: Atom, args: tuple[str, ...], binding: dict[str, str]) -> dict[str, str] | None:
    out = binding
    copied = False
    for term, value in zip(pattern.args, args):
        if is_variable(term):
            bound = out.get(term)
            if bound is None:
                if not copied:
                    out = dict(out)
                    copied = True
                out[term] = value
            elif bound != value:
                return None
        elif term != value:
            return None
    return out


def _join(
    body: tuple[Atom, ...],
    order: list[int],
    sources: list[Mapping[str, set[tuple[str, ...]]]],
    binding: dict[str, str],
) -> Iterator[dict[str, str]]:
    if not order:
        yield binding
        return
    i, rest = order[0], order[1:]
    pattern = body[i]
    for args in sources[i].get(pattern.predicate, ()):
        if len(args) != pattern.arity:
            continue
        b = _match(pattern, args, binding)
        if b is not None:
            yield from _join(body, rest, sources, b)


def _index(atoms: Iterable[Atom]) -> dict[str, set[tuple[str, ...]]]:
    idx: dict[str, set[tuple[str, ...]]] = defaultdict(set)
    for a in atoms:
        idx[a.predicate].add(a.args)
    return idx


def fixpoint(
    active_facts: Iterable[Atom],
    rules: Iterable[Rule],
    constants: Iterable[str] | None = None,
) -> DerivationLog:
    """Compute the least model of ``active_facts`` under ``rules``.

    Rules are tried in the given order each round; within a rule, new
    substitutions fire sorted by their bound constants (variables in order of
    first occurrence). ``constants`` is accepted for interface symmetry with
    the naive evaluator and is not needed by the join.
    """
    del constants
    rules = tuple(rules)
    facts = frozenset(active_facts)
    known: set[Atom] = set(facts)
    full = _index(facts)
    delta = _index(facts)
    seen: set[tuple[str, tuple[str, ...]]] = set()
    instances: list[GroundRuleInstance] = []
    supports: dict[Atom, list[int]] = defaultdict(list)

    while delta:
        fresh: set[Atom] = set()
        for rule in rules:
            variables = rule.variables
            found: set[tuple[str, ...]] = set()
            for i, atom in enumerate(rule.body):
                if atom.predicate not in delta:
                    continue
                sources = [full] * len(rule.body)
                sources[i] = delta
                order = [i] + [j for j in range(len(rule.body)) if j != i]
                for b in _join(rule.body, order, sources, {}):
                    found.add(tuple(b[v] for v in variables))
            for values in sorted(found):
                key = (rule.name, values)
                if key in seen:
                    continue
                seen.add(key)
                inst = instantiate(rule, dict(zip(variables, values)))
                supports[inst.head].append(len(instances))
                instances.append(inst)
                if inst.head not in known:
                    fresh.add(inst.head)
        known |= fresh
        for a in fresh:
            full[a.predicate].add(a.args)
        delta = _index(fresh)

    return DerivationLog(
        facts=facts,
        derived=frozenset(known),
        instances=tuple(instances),
        supports={a: tuple(ix) for a, ix in supports.items()},
    )


def ground_instances_of(log: DerivationLog, atom: Atom) -> list[GroundRuleInstance]:
    """Supporting rule instances of ``atom``, in firing order."""
    try:
        idx = log.supports[atom]
    except KeyError:
        raise NotDerived(f"{atom} has no rule derivation in this log") from None
    return [log.instances[i] for i in idx]
