import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotag.errors import (
    ArityMismatch,
    DuplicateName,
    MissingDeclaration,
    PredicateKindConflict,
    ScenarioError,
    ScenarioSyntaxError,
    UnboundHeadVariable,
    UnknownGoalPredicate,
    UnknownInterval,
)
from iotag.scenario import (
    Atom,
    BaseFact,
    Interval,
    NetworkModel,
    Rule,
    parse_scenario,
    serialize_scenario,
    validate_model,
)

from oracles import random_model

MINIMAL = """\
intervals: day
fact q(a)
rule r1: p(X) :- q(X).
goal: p(a)
"""


def test_corridor_shape(corridor):
    assert [i.name for i in corridor.schedule] == ["morning", "night"]
    assert [i.index for i in corridor.schedule] == [0, 1]
    (camera,) = corridor.deployment_vars
    assert camera.device == "camera"
    assert camera.candidates == ("left", "right")
    assert corridor.persistent_predicates == {"controls"}
    assert corridor.goal == Atom("exfiltrated", ("attacker", "confidential_data"))
    assert corridor.vuln_metadata["bt_unauth"] == (8.8, 0.3)


def test_corridor_validates_clean(corridor):
    assert validate_model(corridor) == []


def test_interval_tags(corridor):
    vac_left = next(f for f in corridor.base_facts if f.atom == Atom("in_zone", ("vacuum", "left")))
    assert vac_left.active_intervals == {"morning"}
    assert Atom("wap_at", ("wap_l", "left")) in corridor.facts_active_in("night")
    assert Atom("attached", ("vacuum", "wap_r")) not in corridor.facts_active_in("morning")


def test_minimal_model():
    m = parse_scenario(MINIMAL)
    assert m.rules == (Rule("r1", Atom("p", ("X",)), (Atom("q", ("X",)),), 1),)
    assert m.base_facts == (BaseFact(Atom("q", ("a",))),)
    assert m.goal == Atom("p", ("a",))


def test_rule_cost_and_comments():
    m = parse_scenario("intervals: d  # one\nfact q(a) # c\nrule r cost=2.5: p(X) :- q(X).\ngoal: p(a)\n")
    assert m.rules[0].cost == 2.5


def test_crlf_accepted():
    assert parse_scenario(MINIMAL.replace("\n", "\r\n")) == parse_scenario(MINIMAL)


def test_unknown_goal_predicate():
    with pytest.raises(UnknownGoalPredicate) as exc:
        parse_scenario("intervals: day\ngoal: win()\n")
    assert exc.value.line == 2


def test_unbound_head_variable_reports_line():
    text = "intervals: day\nfact q(a)\nrule r1: p(X) :- q(Y).\ngoal: p(a)\n"
    with pytest.raises(UnboundHeadVariable) as exc:
        parse_scenario(text)
    assert exc.value.line == 3
    assert exc.value.column == text.splitlines()[2].index("X") + 1


@pytest.mark.parametrize(
    "text, error, line",
    [
        ("intervals: day\nfact q(a)\nfact q(a, b)\ngoal: q(a)\n", ArityMismatch, 3),
        ("intervals: day\nfact q(a) @ night\ngoal: q(a)\n", UnknownInterval, 2),
        ("intervals: day, day\nfact q(a)\ngoal: q(a)\n", DuplicateName, 1),
        ("intervals: day\nfact q(a)\nrule r: p(X) :- q(X).\nrule r: p(X) :- q(X).\ngoal: p(a)\n", DuplicateName, 4),
        ("intervals: day\ndeploy cam in { a, a }\nfact q(a)\ngoal: q(a)\n", DuplicateName, 2),
        ("fact q(a)\ngoal: q(a)\n", MissingDeclaration, 1),
        ("intervals: day\nfact q(a)\n", MissingDeclaration, 2),
        ("intervals: day\nfact q(a)\nrule r: q(X) :- q(X).\ngoal: q(a)\n", PredicateKindConflict, 3),
        ("intervals: day\nfact q(X)\ngoal: q(a)\n", ScenarioSyntaxError, 2),
        ("intervals: day\nfact q(a)\nrule r: p(X) :- q(X)\ngoal: p(a)\n", ScenarioSyntaxError, 3),
        ("intervals: day\n\n  frobnicate\n", ScenarioSyntaxError, 3),
        ("intervals: day\nfact q(a) $\n", ScenarioSyntaxError, 2),
        ("intervals: day\nrule r cost=-1: p(X) :- q(X).\n", ScenarioSyntaxError, 2),
    ],
)
def test_errors_carry_location(text, error, line):
    with pytest.raises(error) as exc:
        parse_scenario(text)
    assert exc.value.line == line
    assert exc.value.column >= 1


def test_persistent_not_derived_is_a_diagnostic():
    m = parse_scenario(MINIMAL + "persistent q\n")
    diags = validate_model(m)
    assert [d.code for d in diags] == ["persistent-not-derived"]
    assert diags[0].entity == "q"


def test_duplicate_rule_name_diagnostic():
    m = parse_scenario(MINIMAL)
    dup = NetworkModel(
        schedule=m.schedule,
        base_facts=m.base_facts,
        rules=m.rules + (Rule("r1", Atom("p", ("X",)), (Atom("q", ("X",)),)),),
        persistent_predicates=frozenset(),
        goal=m.goal,
    )
    diags = validate_model(dup)
    assert len(diags) == 1
    assert diags[0].code == "duplicate-rule" and diags[0].entity == "r1"


def test_validator_finds_several_and_is_stable():
    bad = NetworkModel(
        schedule=(Interval("a", 0), Interval("a", 2)),
        base_facts=(BaseFact(Atom("q", ("x",)), frozenset()), BaseFact(Atom("q", ("x", "y")))),
        rules=(Rule("r", Atom("p", ("Z",)), (Atom("q", ("X",)),), -1),),
        persistent_predicates=frozenset({"zz"}),
        goal=Atom("nope", ()),
        vuln_metadata={"v": (float("nan"), 1.0)},
    )
    first = validate_model(bad)
    assert first == validate_model(bad)
    codes = {d.code for d in first}
    assert {
        "duplicate-interval",
        "interval-index",
        "arity-mismatch",
        "empty-interval-set",
        "unbound-head-variable",
        "bad-cost",
        "unknown-goal-predicate",
        "persistent-not-derived",
        "bad-vuln-metadata",
    } <= codes


def test_round_trip_corridor(corridor):
    text = serialize_scenario(corridor)
    assert parse_scenario(text) == corridor
    assert serialize_scenario(parse_scenario(text)) == text


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_round_trip_random(seed):
    m = random_model(random.Random(seed), with_deploy=seed % 2 == 0)
    again = parse_scenario(serialize_scenario(m))
    assert again == m


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet=st.sampled_from(list("intervalsfactrulegoaldeploy:(),.{}@=-# \nXYZabq0123_\r\t$é")), max_size=120))
def test_parse_is_total(text):
    try:
        parse_scenario(text)
    except ScenarioError as exc:
        assert exc.line >= 1 and exc.column >= 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 200))
def test_syntax_error_line_holds_first_violation(seed, cut):
    text = serialize_scenario(random_model(random.Random(seed)))
    lines = text.splitlines()
    k = cut % len(lines)
    lines[k] = lines[k] + " )"
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario("\n".join(lines))
    assert exc.value.line == k + 1


def test_parse_is_deterministic(corridor_file):
    text = corridor_file.read_text()
    assert parse_scenario(text) == parse_scenario(text)
