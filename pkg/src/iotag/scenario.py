"""Network-model types and the line-oriented scenario file format.

A scenario file holds one statement per line::

    intervals: morning, night
    fact in_zone(vacuum, left) @ morning
    rule bluetooth_infect cost=2: controls(A, D) :- near(A, Z), in_zone(D, Z).
    persistent controls
    goal: exfiltrated(attacker, data)
    deploy camera in { left, right }
    vuln bt_unauth severity=7.5 complexity=0.3

Identifiers starting with an uppercase letter are variables, lowercase ones
are constants. ``#`` starts a comment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import (
    ArityMismatch,
    DuplicateName,
    MissingDeclaration,
    PredicateKindConflict,
    ScenarioSyntaxError,
    UnboundHeadVariable,
    UnknownGoalPredicate,
    UnknownInterval,
)

PLACEMENT_PREDICATE = "placed"


def is_variable(term: str) -> bool:
    return term[:1].isupper()


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    args: tuple[str, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_ground(self) -> bool:
        return not any(is_variable(a) for a in self.args)

    def variables(self) -> Iterator[str]:
        return (a for a in self.args if is_variable(a))

    def substitute(self, binding: Mapping[str, str]) -> Atom:
        return Atom(self.predicate, tuple(binding.get(a, a) for a in self.args))

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class Interval:
    name: str
    index: int


@dataclass(frozen=True)
class BaseFact:
    """A ground atom plus the intervals it holds in (``None`` means all)."""

    atom: Atom
    active_intervals: frozenset[str] | None = None

    def active_in(self, interval: str) -> bool:
        return self.active_intervals is None or interval in self.active_intervals


@dataclass(frozen=True)
class Rule:
    name: str
    head: Atom
    body: tuple[Atom, ...]
    cost: float = 1

    @property
    def variables(self) -> tuple[str, ...]:
        """Variables in order of first occurrence, head first."""
        seen: dict[str, None] = {}
        for atom in (self.head, *self.body):
            for v in atom.variables():
                seen.setdefault(v, None)
        return tuple(seen)

    def __str__(self) -> str:
        body = ", ".join(str(a) for a in self.body)
        return f"{self.name}: {self.head} :- {body}."


@dataclass(frozen=True)
class DeploymentVariable:
    device: str
    candidates: tuple[str, ...]
    placement_predicate: str = PLACEMENT_PREDICATE

    def atom(self, zone: str) -> Atom:
        return Atom(self.placement_predicate, (self.device, zone))


@dataclass(frozen=True)
class NetworkModel:
    schedule: tuple[Interval, ...]
    base_facts: tuple[BaseFact, ...]
    rules: tuple[Rule, ...]
    persistent_predicates: frozenset[str]
    goal: Atom
    deployment_vars: tuple[DeploymentVariable, ...] = ()
    vuln_metadata: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    @property
    def interval_names(self) -> tuple[str, ...]:
        return tuple(i.name for i in self.schedule)

    @property
    def head_predicates(self) -> frozenset[str]:
        return frozenset(r.head.predicate for r in self.rules)

    @property
    def fact_predicates(self) -> frozenset[str]:
        preds = {f.atom.predicate for f in self.base_facts}
        if self.deployment_vars:
            preds.add(PLACEMENT_PREDICATE)
        return frozenset(preds)

    def is_base_predicate(self, predicate: str) -> bool:
        """True for predicates never derived by a rule (rendered as facts)."""
        return predicate not in self.head_predicates

    def arities(self) -> dict[str, int]:
        out: dict[str, int] = {}
        if self.deployment_vars:
            out[PLACEMENT_PREDICATE] = 2
        for atom in self._all_atoms():
            out.setdefault(atom.predicate, atom.arity)
        return out

    def _all_atoms(self) -> Iterator[Atom]:
        for f in self.base_facts:
            yield f.atom
        for r in self.rules:
            yield r.head
            yield from r.body
        yield self.goal

    @property
    def constants(self) -> frozenset[str]:
        consts = {a for atom in self._all_atoms() for a in atom.args if not is_variable(a)}
        for dv in self.deployment_vars:
            consts.add(dv.device)
            consts.update(dv.candidates)
        consts.update(self.vuln_metadata)
        return frozenset(consts)

    def facts_active_in(self, interval: str) -> frozenset[Atom]:
        return frozenset(f.atom for f in self.base_facts if f.active_in(interval))

    def interval_at(self, step: int) -> Interval:
        return self.schedule[step % len(self.schedule)]

    def deployment_var(self, device: str) -> DeploymentVariable | None:
        for dv in self.deployment_vars:
            if dv.device == device:
                return dv
        return None


# --------------------------------------------------------------------------
# lexing

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<implies>:-)
  | (?P<punct>[():,.{}@=])
    """,
    re.VERBOSE,
)

_NAME_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_VAR_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    col: int


def _tokenize(line: str, lineno: int) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(line):
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            raise ScenarioSyntaxError(f"unexpected character {line[pos]!r}", lineno, pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            text = m.group()
            tokens.append(_Token("punct" if kind == "implies" else kind, text, pos + 1))
        pos = m.end()
    return tokens


class _Cursor:
    def __init__(self, tokens: list[_Token], lineno: int, line: str) -> None:
        self.tokens = tokens
        self.pos = 0
        self.lineno = lineno
        self.end_col = len(line.rstrip()) + 1

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def error(self, message: str, tok: _Token | None = None) -> ScenarioSyntaxError:
        tok = tok if tok is not None else self.peek()
        col = tok.col if tok is not None else self.end_col
        found = repr(tok.text) if tok is not None else "end of line"
        return ScenarioSyntaxError(f"{message}, found {found}", self.lineno, col)

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise self.error("unexpected end of statement")
        self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind in ("punct", "ident") and tok.text == text

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def name(self, what: str) -> _Token:
        tok = self.peek()
        if tok is None or tok.kind != "ident" or not _NAME_RE.match(tok.text):
            raise self.error(f"expected {what} (lowercase identifier)")
        return self.next()

    def term(self, allow_variables: bool) -> _Token:
        tok = self.peek()
        if tok is not None and tok.kind == "ident":
            if _NAME_RE.match(tok.text):
                return self.next()
            if _VAR_RE.match(tok.text):
                if not allow_variables:
                    raise self.error("variables are not allowed here")
                return self.next()
        raise self.error("expected a constant or variable")

    def number(self, what: str) -> float:
        tok = self.peek()
        if tok is None or tok.kind != "number":
            raise self.error(f"expected a non-negative number for {what}")
        try:
            value = _to_number(tok.text)
        except ValueError:
            raise self.error(f"{what} must be finite") from None
        self.next()
        return value

    def done(self) -> None:
        if self.peek() is not None:
            raise self.error("unexpected trailing input")


def _to_number(text: str) -> float:
    if re.fullmatch(r"\d+", text):
        return int(text)
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


# --------------------------------------------------------------------------
# statements (syntax phase)


@dataclass(frozen=True)
class _Located:
    """An atom together with the columns of its pieces, for error reporting."""

    atom: Atom
    lineno: int
    col: int
    arg_cols: tuple[int, ...]


@dataclass
class _Statement:
    kind: str
    lineno: int
    col: int
    payload: dict


def _parse_atom(cur: _Cursor, allow_variables: bool) -> _Located:
    pred = cur.name("predicate name")
    cur.expect("(")
    args: list[str] = []
    cols: list[int] = []
    if not cur.at(")"):
        while True:
            tok = cur.term(allow_variables)
            args.append(tok.text)
            cols.append(tok.col)
            if not cur.at(","):
                break
            cur.next()
    cur.expect(")")
    return _Located(Atom(pred.text, tuple(args)), cur.lineno, pred.col, tuple(cols))


def _parse_statement(cur: _Cursor) -> _Statement:
    kw = cur.peek()
    assert kw is not None
    if kw.kind != "ident":
        raise cur.error("expected a statement keyword")
    cur.next()
    word = kw.text
    stmt = _Statement(word, cur.lineno, kw.col, {})
    p = stmt.payload

    if word == "intervals":
        cur.expect(":")
        names = [cur.name("interval name")]
        while cur.at(","):
            cur.next()
            names.append(cur.name("interval name"))
        p["names"] = names
    elif word == "fact":
        p["atom"] = _parse_atom(cur, allow_variables=False)
        tags: list[_Token] = []
        if cur.at("@"):
            cur.next()
            tags.append(cur.name("interval name"))
            while cur.at(","):
                cur.next()
                tags.append(cur.name("interval name"))
        p["tags"] = tags
    elif word == "rule":
        p["name"] = cur.name("rule name")
        cost: float = 1
        if cur.at("cost"):
            cur.next()
            cur.expect("=")
            cost = cur.number("cost")
        p["cost"] = cost
        cur.expect(":")
        p["head"] = _parse_atom(cur, allow_variables=True)
        cur.expect(":-")
        body = [_parse_atom(cur, allow_variables=True)]
        while cur.at(","):
            cur.next()
            body.append(_parse_atom(cur, allow_variables=True))
        cur.expect(".")
        p["body"] = body
    elif word == "persistent":
        preds = [cur.name("predicate name")]
        while cur.at(","):
            cur.next()
            preds.append(cur.name("predicate name"))
        p["preds"] = preds
    elif word == "goal":
        cur.expect(":")
        p["atom"] = _parse_atom(cur, allow_variables=False)
    elif word == "deploy":
        p["device"] = cur.name("device name")
        cur.expect("in")
        cur.expect("{")
        zones = [cur.name("zone name")]
        while cur.at(","):
            cur.next()
            zones.append(cur.name("zone name"))
        cur.expect("}")
        p["zones"] = zones
    elif word == "vuln":
        p["name"] = cur.name("vulnerability name")
        cur.expect("severity")
        cur.expect("=")
        p["severity"] = cur.number("severity")
        cur.expect("complexity")
        cur.expect("=")
        p["complexity"] = cur.number("complexity")
    else:
        raise ScenarioSyntaxError(f"unknown statement {word!r}", cur.lineno, kw.col)
    cur.done()
    return stmt


def _split_lines(text: str) -> list[str]:
    # str.splitlines also breaks on \x0b, \x1c, ... which would shift line numbers
    return [ln[:-1] if ln.endswith("\r") else ln for ln in text.split("\n")]


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


# --------------------------------------------------------------------------
# semantic phase


def parse_scenario(text: str) -> NetworkModel:
    """Parse scenario text into a :class:`NetworkModel`.

    Raises a :class:`~iotag.errors.ScenarioError` subclass carrying line and
    column on any malformed input; no other exception escapes.
    """
    statements: list[_Statement] = []
    lines = _split_lines(text)
    for lineno, raw in enumerate(lines, start=1):
        line = _strip_comment(raw)
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        statements.append(_parse_statement(_Cursor(tokens, lineno, line)))

    interval_stmts = [s for s in statements if s.kind == "intervals"]
    if not interval_stmts:
        raise MissingDeclaration("no 'intervals:' statement", 1, 1)
    if len(interval_stmts) > 1:
        s = interval_stmts[1]
        raise DuplicateName("intervals declared more than once", s.lineno, s.col)
    names: list[str] = []
    for tok in interval_stmts[0].payload["names"]:
        if tok.text in names:
            raise DuplicateName(f"interval {tok.text!r} listed twice", interval_stmts[0].lineno, tok.col)
        names.append(tok.text)
    schedule = tuple(Interval(n, i) for i, n in enumerate(names))

    arity: dict[str, int] = {}
    has_deploy = any(s.kind == "deploy" for s in statements)
    if has_deploy:
        arity[PLACEMENT_PREDICATE] = 2

    def check_arity(loc: _Located) -> None:
        a = loc.atom
        expected = arity.setdefault(a.predicate, a.arity)
        if expected != a.arity:
            raise ArityMismatch(
                f"predicate {a.predicate!r} used with {a.arity} argument(s), expected {expected}",
                loc.lineno,
                loc.col,
            )

    facts: list[BaseFact] = []
    fact_lines: dict[str, _Located] = {}
    rules: list[Rule] = []
    rule_names: set[str] = set()
    head_lines: dict[str, _Located] = {}
    persistent: set[str] = set()
    goal: _Located | None = None
    goal_stmt: _Statement | None = None
    deploys: list[DeploymentVariable] = []
    vulns: dict[str, tuple[float, float]] = {}

    for s in statements:
        p = s.payload
        if s.kind == "fact":
            loc = p["atom"]
            check_arity(loc)
            tags: frozenset[str] | None = None
            if p["tags"]:
                seen: set[str] = set()
                for tok in p["tags"]:
                    if tok.text not in names:
                        raise UnknownInterval(f"unknown interval {tok.text!r}", s.lineno, tok.col)
                    if tok.text in seen:
                        raise DuplicateName(f"interval {tok.text!r} tagged twice", s.lineno, tok.col)
                    seen.add(tok.text)
                tags = frozenset(seen)
            facts.append(BaseFact(loc.atom, tags))
            fact_lines.setdefault(loc.atom.predicate, loc)
        elif s.kind == "rule":
            name_tok = p["name"]
            if name_tok.text in rule_names:
                raise DuplicateName(f"rule {name_tok.text!r} already defined", s.lineno, name_tok.col)
            rule_names.add(name_tok.text)
            head: _Located = p["head"]
            body: list[_Located] = p["body"]
            for loc in (head, *body):
                check_arity(loc)
            body_vars = {v for loc in body for v in loc.atom.variables()}
            for term, col in zip(head.atom.args, head.arg_cols):
                if is_variable(term) and term not in body_vars:
                    raise UnboundHeadVariable(
                        f"head variable {term!r} of rule {name_tok.text!r} does not occur in the body",
                        s.lineno,
                        col,
                    )
            rules.append(Rule(name_tok.text, head.atom, tuple(b.atom for b in body), p["cost"]))
            head_lines.setdefault(head.atom.predicate, head)
        elif s.kind == "persistent":
            persistent.update(t.text for t in p["preds"])
        elif s.kind == "goal":
            if goal is not None:
                raise DuplicateName("goal declared more than once", s.lineno, s.col)
            goal = p["atom"]
            goal_stmt = s
            check_arity(goal)
        elif s.kind == "deploy":
            dev = p["device"]
            if any(d.device == dev.text for d in deploys):
                raise DuplicateName(f"device {dev.text!r} deployed twice", s.lineno, dev.col)
            zones: list[str] = []
            for tok in p["zones"]:
                if tok.text in zones:
                    raise DuplicateName(f"zone {tok.text!r} listed twice", s.lineno, tok.col)
                zones.append(tok.text)
            deploys.append(DeploymentVariable(dev.text, tuple(zones)))
        elif s.kind == "vuln":
            tok = p["name"]
            if tok.text in vulns:
                raise DuplicateName(f"vulnerability {tok.text!r} declared twice", s.lineno, tok.col)
            vulns[tok.text] = (p["severity"], p["complexity"])

    if goal is None or goal_stmt is None:
        last = len(lines) - 1 if len(lines) > 1 and lines[-1] == "" else len(lines)
        raise MissingDeclaration("no 'goal:' statement", last, 1)

    fact_preds = set(fact_lines)
    if has_deploy:
        fact_preds.add(PLACEMENT_PREDICATE)
    for pred, loc in head_lines.items():
        if pred in fact_preds:
            raise PredicateKindConflict(
                f"predicate {pred!r} is both a base fact and a rule head", loc.lineno, loc.col
            )
    if goal.atom.predicate not in fact_preds and goal.atom.predicate not in head_lines:
        raise UnknownGoalPredicate(
            f"goal predicate {goal.atom.predicate!r} is neither a base fact nor a rule head",
            goal.lineno,
            goal.col,
        )

    return NetworkModel(
        schedule=schedule,
        base_facts=tuple(facts),
        rules=tuple(rules),
        persistent_predicates=frozenset(persistent),
        goal=goal.atom,
        deployment_vars=tuple(deploys),
        vuln_metadata=vulns,
    )


# --------------------------------------------------------------------------
# serialization


def _fmt_number(x: float) -> str:
    return str(x) if isinstance(x, int) else repr(float(x))


def serialize_scenario(model: NetworkModel) -> str:
    """Render ``model`` back to scenario text (LF line endings)."""
    out = ["intervals: " + ", ".join(model.interval_names)]
    for f in model.base_facts:
        line = f"fact {f.atom}"
        if f.active_intervals is not None:
            tags = [n for n in model.interval_names if n in f.active_intervals]
            line += " @ " + ", ".join(tags)
        out.append(line)
    for r in model.rules:
        cost = "" if r.cost == 1 else f" cost={_fmt_number(r.cost)}"
        body = ", ".join(str(a) for a in r.body)
        out.append(f"rule {r.name}{cost}: {r.head} :- {body}.")
    if model.persistent_predicates:
        out.append("persistent " + ", ".join(sorted(model.persistent_predicates)))
    out.append(f"goal: {model.goal}")
    for dv in model.deployment_vars:
        out.append(f"deploy {dv.device} in {{ {', '.join(dv.candidates)} }}")
    for name, (sev, cx) in model.vuln_metadata.items():
        out.append(f"vuln {name} severity={_fmt_number(sev)} complexity={_fmt_number(cx)}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    code: str
    entity: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.entity}: {self.message}"


def _duplicates(items: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for x in items:
        if x in seen and x not in dups:
            dups.append(x)
        seen.add(x)
    return dups


def validate_model(model: NetworkModel) -> list[Diagnostic]:
    """Check every model invariant; an empty list means the model is sound."""
    diags: list[Diagnostic] = []

    def add(code: str, entity: str, message: str) -> None:
        diags.append(Diagnostic(code, entity, message))

    if not model.schedule:
        add("empty-schedule", "intervals", "at least one interval is required")
    for name in _duplicates(model.interval_names):
        add("duplicate-interval", name, "interval name is not unique")
    if [i.index for i in model.schedule] != list(range(len(model.schedule))):
        add("interval-index", "intervals", "indices must be 0..n-1 in schedule order")

    arity: dict[str, int] = {}
    if model.deployment_vars:
        arity[PLACEMENT_PREDICATE] = 2
    for atom in model._all_atoms():
        expected = arity.setdefault(atom.predicate, atom.arity)
        if expected != atom.arity:
            add("arity-mismatch", str(atom), f"expected {expected} argument(s)")

    names = set(model.interval_names)
    for f in model.base_facts:
        if not f.atom.is_ground:
            add("non-ground-fact", str(f.atom), "base facts must be ground")
        if f.active_intervals is not None:
            if not f.active_intervals:
                add("empty-interval-set", str(f.atom), "fact is active in no interval")
            for n in sorted(f.active_intervals - names):
                add("unknown-interval", str(f.atom), f"interval {n!r} is not in the schedule")

    for name in _duplicates(r.name for r in model.rules):
        add("duplicate-rule", name, "rule name is not unique")
    for r in model.rules:
        if not r.body:
            add("empty-body", r.name, "rule body must be non-empty")
        body_vars = {v for a in r.body for v in a.variables()}
        for v in dict.fromkeys(r.head.variables()):
            if v not in body_vars:
                add("unbound-head-variable", r.name, f"variable {v!r} does not occur in the body")
        if not (isinstance(r.cost, (int, float)) and math.isfinite(r.cost) and r.cost >= 0):
            add("bad-cost", r.name, "cost must be a finite non-negative number")

    if not model.goal.is_ground:
        add("non-ground-goal", str(model.goal), "goal must be ground")
    heads = model.head_predicates
    fact_preds = model.fact_predicates
    if model.goal.predicate not in heads and model.goal.predicate not in fact_preds:
        add("unknown-goal-predicate", model.goal.predicate, "goal is neither a base fact nor a rule head")
    for pred in sorted(model.persistent_predicates - heads):
        add("persistent-not-derived", pred, "persistent predicate is never a rule head")
    for pred in sorted(heads & fact_preds):
        add("predicate-kind-conflict", pred, "predicate is both a base fact and a rule head")

    for name in _duplicates(dv.device for dv in model.deployment_vars):
        add("duplicate-device", name, "device is deployed twice")
    mentioned = {
        a for atom in model._all_atoms() for a in atom.args if not is_variable(a)
    }
    for dv in model.deployment_vars:
        if not dv.candidates:
            add("no-candidates", dv.device, "deployment needs at least one candidate zone")
        for z in _duplicates(dv.candidates):
            add("duplicate-zone", dv.device, f"zone {z!r} listed twice")
        for z in dv.candidates:
            if z not in mentioned:
                add("undeclared-zone", dv.device, f"zone {z!r} does not occur in any fact or rule")

    for name, (sev, cx) in model.vuln_metadata.items():
        for label, value in (("severity", sev), ("complexity", cx)):
            if not (math.isfinite(value) and value >= 0):
                add("bad-vuln-metadata", name, f"{label} must be finite and non-negative")
    return diags
