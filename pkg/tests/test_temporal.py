import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iotag.datalog import fixpoint
from iotag.errors import IncompletePlacement, InvalidZone, StepOutOfRange
from iotag.graph import NodeKind
from iotag.scenario import Atom, BaseFact, Interval, NetworkModel, Rule
from iotag.temporal import check_state, evaluate_schedule, states_at, step_bound

from oracles import persistent_bound, random_case, simulate

VAC_CONTROL = "p:controls(attacker,vacuum)"
R_SIDE = "f:attached(vacuum,wap_r)"


def _random_case(seed):
    return random_case(seed)


def test_camera_left_reaches_goal_at_night(camera_left):
    r = camera_left
    assert r.reached and r.earliest_step == 1
    assert r.interval_names[:2] == ("morning", "night")
    assert r.model.goal not in r.logs[0].derived
    assert r.model.goal in r.logs[1].derived


def test_camera_right_reaches_goal_in_the_morning(camera_right):
    assert camera_right.reached and camera_right.earliest_step == 0
    # the first cycle is still recorded in full
    assert camera_right.steps_evaluated == 2


def test_states_at_corridor(camera_left):
    s0 = states_at(camera_left, 0)
    goal = camera_left.graph.goal_id
    assert s0.node_states[VAC_CONTROL] is True
    assert s0.node_states[goal] is False
    s1 = states_at(camera_left, 1)
    assert s1.node_states[R_SIDE] is True
    assert s1.node_states[goal] is True
    assert Atom("controls", ("attacker", "vacuum")) in s1.carried
    with pytest.raises(StepOutOfRange):
        states_at(camera_left, camera_left.steps_evaluated)
    with pytest.raises(StepOutOfRange):
        states_at(camera_left, -1)


def test_volatile_morning_fact_off_at_night(corridor):
    r = evaluate_schedule(corridor, {"camera": "left"}, max_steps=6)
    assert r.terminated_by == "goal"
    morning_only = [
        f"f:{f.atom}" for f in corridor.base_facts if f.active_intervals == frozenset({"morning"})
    ]
    assert morning_only
    for st_ in r.per_step_states:
        for fid in morning_only:
            assert st_.node_states[fid] is (st_.interval == "morning")


def test_states_satisfy_invariants(camera_left, camera_right):
    for r in (camera_left, camera_right):
        for st_ in r.per_step_states:
            assert check_state(r, st_) == []


def test_goal_as_base_fact_reached_immediately():
    m = NetworkModel(
        schedule=(Interval("a", 0), Interval("b", 1)),
        base_facts=(BaseFact(Atom("win", ())),),
        rules=(Rule("r", Atom("p", ()), (Atom("win", ()),)),),
        persistent_predicates=frozenset(),
        goal=Atom("win", ()),
    )
    r = evaluate_schedule(m)
    assert r.reached and r.earliest_step == 0
    assert all(i.rule_name != "win" for i in r.logs[0].instances)


def test_persistence_carries_infection_forward():
    # infection possible only in "a"; exploitation needs "b"
    m = NetworkModel(
        schedule=(Interval("a", 0), Interval("b", 1)),
        base_facts=(BaseFact(Atom("near", ()), frozenset({"a"})), BaseFact(Atom("link", ()), frozenset({"b"}))),
        rules=(
            Rule("infect", Atom("owned", ()), (Atom("near", ()),)),
            Rule("use", Atom("goal", ()), (Atom("owned", ()), Atom("link", ()))),
        ),
        persistent_predicates=frozenset({"owned"}),
        goal=Atom("goal", ()),
    )
    assert evaluate_schedule(m).earliest_step == 1
    volatile = NetworkModel(**{**m.__dict__, "persistent_predicates": frozenset()})
    r = evaluate_schedule(volatile)
    assert not r.reached and r.terminated_by == "fixpoint"


def test_placement_errors(corridor):
    with pytest.raises(IncompletePlacement):
        evaluate_schedule(corridor, {})
    with pytest.raises(InvalidZone):
        evaluate_schedule(corridor, {"camera": "attic"})
    with pytest.raises(InvalidZone):
        evaluate_schedule(corridor, {"camera": "left", "toaster": "left"})


def test_max_steps_caps_the_walk(corridor):
    r = evaluate_schedule(corridor, {"camera": "left"}, max_steps=1)
    assert r.steps_evaluated == 1 and not r.reached and r.terminated_by == "max_steps"


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_bounded_simulator(seed):
    m, placement = _random_case(seed)
    r = evaluate_schedule(m, placement)
    reached, earliest, _ = simulate(m, placement)
    assert (r.reached, r.earliest_step) == (reached, earliest)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_step_properties(seed):
    m, placement = _random_case(seed)
    r = evaluate_schedule(m, placement)
    # termination bound, computed independently
    assert r.steps_evaluated <= (persistent_bound(m) + 1) * len(m.schedule)
    assert step_bound(m) == (persistent_bound(m) + 1) * len(m.schedule)
    carried = [s.carried for s in r.per_step_states]
    for a, b in zip(carried, carried[1:]):
        assert a <= b
    preds = r.graph.predecessors
    for s in r.per_step_states:
        assert check_state(r, s) == []
        for node in r.graph.nodes:
            if node.kind is NodeKind.EXPLOIT and s.node_states[node.id]:
                assert all(s.node_states[p] for p in preds[node.id])
    if r.reached:
        assert r.per_step_states[r.earliest_step].node_states[r.graph.goal_id]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fixpoint_end_is_cycle_invariant(seed):
    m, placement = _random_case(seed)
    r = evaluate_schedule(m, placement)
    if r.terminated_by != "fixpoint":
        return
    from iotag.temporal import placement_facts

    placed = placement_facts(m, placement)
    carried = r.per_step_states[-1].carried | {
        a for a in r.logs[-1].derived if a.predicate in m.persistent_predicates
    }
    for step in range(r.steps_evaluated, r.steps_evaluated + len(m.schedule)):
        active = m.facts_active_in(m.interval_at(step).name) | placed | carried
        log = fixpoint(active, m.rules)
        assert {a for a in log.derived if a.predicate in m.persistent_predicates} <= carried
        assert m.goal not in log.derived
