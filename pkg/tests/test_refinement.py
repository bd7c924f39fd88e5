"""Counterexample trees, genuineness checking, and the refinement loop."""

from pathlib import Path

import pytest

from helpers import assert_act_well_formed, counter_model, echo_model, robot_model
from obsynth import engine
from obsynth.abstraction import bits_str, build_abstract_game, initial_predicates
from obsynth.formulas import evaluate
from obsynth.games import FiniteGame, solve_safety
from obsynth.refinement import (
    Budget,
    Genuine,
    NoProgress,
    RefinementError,
    Spurious,
    TraceNotInNode,
    abstract_and_refine,
    build_act,
    check_genuine,
    refine_observation,
    refine_transitions,
    sensor_reconfigure,
)
from obsynth.specfile import parse_model

BENCH = Path(__file__).resolve().parent.parent / "benchmarks"


def _lost_abstraction(m):
    pset = initial_predicates(m)
    game = build_abstract_game(m, pset)
    won = solve_safety(FiniteGame.from_abstract(game))
    assert won.player == 2
    return pset, game, won


@pytest.fixture(scope="module")
def robot_act():
    m = robot_model()
    pset, game, won = _lost_abstraction(m)
    return m, pset, game, build_act(game, won.strategy)


@pytest.fixture(scope="module")
def echo_act():
    m = echo_model()
    pset, game, won = _lost_abstraction(m)
    return m, pset, game, build_act(game, won.strategy)


def test_act_construction_rules(robot_act, echo_act):
    for _, _, _, act in (robot_act, echo_act):
        assert_act_well_formed(act)


def test_act_variable_copies(robot_act):
    """Visible variables, the output, and the turn flag get one copy per
    node; hidden variables get one copy per remaining trace."""
    m, _, _, act = robot_act
    root = act.root
    w1, w2 = ("east", "east"), ("west", "west")
    c1, c2 = act.copies(root, w1), act.copies(root, w2)
    x = m.var("x")
    y = m.var("y")
    assert c1[x].name == c2[x].name == "x@0"
    assert c1[m.output].name == "u@0"
    assert c1[m.turn].name == "t@0"
    assert c1[y].name == "y@0@east-east"
    assert c2[y].name == "y@0@west-west"
    assert act.unindex[c1[y]].name == "y"
    assert act.unindex[c1[x]].name == "x"


def test_act_trace_enumeration(robot_act):
    _, _, _, act = robot_act
    words = act.traces(act.root)
    assert len(words) == 16
    assert words[0] == ("east", "east")
    assert words[-1] == ("south", "south")
    assert len(act.dump()) == len(act.nodes)
    with pytest.raises(TraceNotInNode):
        act.trace_formula(act.root, ("north", "north", "north"))


def test_act_needs_a_player_two_strategy():
    m = parse_model((BENCH / "case2.spec").read_text())
    game = build_abstract_game(m, initial_predicates(m))
    won = solve_safety(FiniteGame.from_abstract(game))
    assert won.player == 1
    with pytest.raises(RefinementError):
        build_act(game, won.strategy)


def test_robot_counterexample_is_transition_spurious(robot_act):
    """The environment's abstract win drives the robot into x <= -1, a jump
    the concrete dynamics cannot make from the initial position."""
    _, _, game, act = robot_act
    west = next(child for sigma, child in act.root.children if sigma == "west")
    ((_, after_env),) = west.children
    assert [bits_str(s) for s in after_env.label.members] == ["001001001"]
    assert any(
        any(s[2] for s in node.label.members) for node in act.nodes if node.is_leaf
    )

    verdict = check_genuine(act)
    assert isinstance(verdict, Spurious)
    assert verdict.kind == "transition"
    assert verdict.pairs
    for node_id, w in verdict.pairs:
        assert node_id == act.root.id
        assert engine.check_sat(act.rooted_trace_formula(w)) is None
    # The drift moves really can push y past 4, so those words stay open.
    words = {w for _, w in verdict.pairs}
    assert not any(w[0] == "north" for w in words)


def test_transition_refinement_adds_boundary_predicates(robot_act):
    _, pset, _, act = robot_act
    verdict = check_genuine(act)
    grown = refine_transitions(act, verdict.pairs, pset)
    assert grown.describe()[len(pset):] == ["not(x<7)", "x<=1", "2y<=-5"]
    with pytest.raises(NoProgress):
        refine_transitions(act, verdict.pairs, grown)
    with pytest.raises(RefinementError):
        refine_observation(act, pset)


def test_echo_counterexample_is_observation_spurious(echo_act):
    """Every branch of the echo tree is concretely playable on its own; they
    only clash through the shared visible copy of the echoed register."""
    _, pset, game, act = echo_act
    assert len(game) == 22
    verdict = check_genuine(act)
    assert isinstance(verdict, Spurious)
    assert verdict.kind == "observation"
    assert verdict.pairs == []
    for w in act.traces(act.root):
        assert engine.check_sat(act.rooted_trace_formula(w)) is not None

    grown = refine_observation(act, pset)
    fresh = grown.predicates[len(pset):]
    assert fresh
    for p in fresh:
        assert {v.name for v in p.variables()} == {"c"}


def test_echo_synthesis_refines_observation(echo_act):
    m, _, _, _ = echo_act
    before = dict(engine.INTERPOLATION_STATS)
    out = abstract_and_refine(m)
    calls = engine.INTERPOLATION_STATS["calls"] - before["calls"]
    verified = engine.INTERPOLATION_STATS["verified"] - before["verified"]
    assert out.verdict == "realizable"
    assert [r.verdict for r in out.log] == ["refined-observation", "realizable"]
    assert out.predicates.describe()[7:] == ["c=-1", "c=1", "c=0"]
    assert calls == verified == 1


def test_robot_synthesis_converges():
    out = abstract_and_refine(robot_model())
    assert out.verdict == "realizable"
    assert [(r.iteration, r.num_predicates, r.num_states, r.verdict) for r in out.log] == [
        (1, 12, 26, "refined-transitions"),
        (2, 12, 100, "realizable"),
    ]
    assert out.strategy is not None and out.strategy.owner == 1
    assert out.game is not None
    line = out.log[0].line()
    assert line == (
        f"iteration=1 predicates=12 states=26 "
        f"verdict=refined-transitions millis={out.log[0].millis}"
    )


def test_doomed_counter_is_genuinely_unrealizable():
    out = abstract_and_refine(counter_model(bound=1), budget=Budget(max_iterations=5))
    assert out.verdict == "unrealizable"
    assert out.witness
    assert out.act is not None
    assert evaluate(out.act.tree_formula(), out.witness)
    verdict = check_genuine(out.act)
    assert isinstance(verdict, Genuine)
    with pytest.raises(RefinementError):
        refine_observation(out.act, out.predicates)


def test_budget_exhaustion_paths():
    m = robot_model()
    out = abstract_and_refine(m, budget=Budget(max_iterations=1))
    assert out.verdict == "inconclusive"
    assert "iteration budget" in out.reason

    out = abstract_and_refine(m, budget=Budget(max_predicates=5))
    assert out.verdict == "inconclusive"
    assert "predicate budget" in out.reason

    out = abstract_and_refine(m, budget=Budget(timeout_secs=0.0))
    assert out.verdict == "inconclusive"
    assert "wall-clock" in out.reason

    out = abstract_and_refine(m, budget=Budget(max_states=10))
    assert out.verdict == "inconclusive"
    assert "exceeds" in out.reason


def test_reconfigure_reports_realizable_tasks():
    m = parse_model((BENCH / "case1.spec").read_text())
    rep = sensor_reconfigure(m)
    assert rep.verdict == "already-realizable"
    assert rep.full is None
    assert rep.modalities == [] and rep.precision == []
    assert rep.lines() == ["verdict: already-realizable"]


def test_reconfigure_reports_impossible_tasks():
    rep = sensor_reconfigure(counter_model(bound=1), Budget(max_iterations=5))
    assert rep.verdict == "infeasible"
    assert rep.original.verdict == "unrealizable"
    assert rep.full is not None and rep.full.verdict == "unrealizable"
    assert rep.lines() == ["verdict: infeasible"]


def test_reconfigure_suggests_hidden_variable_sensors():
    m = parse_model((BENCH / "drift.spec").read_text())
    rep = sensor_reconfigure(m)
    assert rep.verdict == "reconfigurable"
    assert rep.original.verdict == "unrealizable"
    assert rep.full is not None and rep.full.verdict == "realizable"
    assert rep.modalities == ["not(y<2)", "y<=-2", "not(2y<1)", "2y<=-1"]
    assert rep.precision == []
    lines = rep.lines()
    assert lines[0] == "verdict: reconfigurable"
    assert "  not(y<2)" in lines
