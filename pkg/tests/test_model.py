from fractions import Fraction

import pytest

from obsynth.formulas import (
    BOOLEAN,
    FALSE,
    RATIONAL,
    TRUE,
    Variable,
    bool_var,
    conj,
    disj,
    enum_eq,
    evaluate,
    linear_atom,
    neg,
    prime,
    var_eq,
)
from obsynth.model import (
    ModelError,
    NoSuccessor,
    Observation,
    State,
    SystemModel,
    initial_state,
    observe,
    sample_successor,
    validate_model,
)

from helpers import counter_model, robot_model


def test_state_is_hashable_and_exact():
    a = State({"x": 0.5, "t": True})
    b = State({"x": Fraction(1, 2), "t": True})
    assert a == b and hash(a) == hash(b)
    assert a["x"] == Fraction(1, 2)
    c = a.updated({"x": 2})
    assert c["x"] == 2 and a["x"] == Fraction(1, 2)


def test_observation_requires_matching_value_cover():
    Observation(["u"], {"u": "east"})
    with pytest.raises(ModelError):
        Observation(["u", "t"], {"u": "east"})


def test_model_structure_guards():
    t = Variable("t", "turn", BOOLEAN)
    u = Variable("u", "output", ("a", "b"))
    x = Variable("x", "input", RATIONAL)
    with pytest.raises(ModelError):
        SystemModel([x, u], TRUE, TRUE, FALSE)  # no turn variable
    with pytest.raises(ModelError):
        SystemModel([x, t], TRUE, TRUE, FALSE)  # no output
    with pytest.raises(ModelError):
        SystemModel([x, x, u, t], TRUE, TRUE, FALSE)  # duplicate names
    with pytest.raises(ModelError):
        SystemModel([x, u, t], TRUE, TRUE, FALSE, {u: TRUE})  # sensor on non-input
    with pytest.raises(ModelError):
        SystemModel([x, prime(x), u, t], TRUE, TRUE, FALSE)  # primed declaration


def test_turn_formulas_frame_the_right_variables():
    m = robot_model()
    # a system move keeps every input and flips the turn flag
    v = {"x": Fraction(4), "y": Fraction(3), "u": "east", "t": True}
    moved = {**{k + "'": w for k, w in v.items()}, **v}
    moved["u'"] = "north"
    moved["t'"] = False
    assert evaluate(m.t1_formula, moved)
    stays = dict(moved)
    stays["x'"] = Fraction(6)
    assert not evaluate(m.t1_formula, stays)
    # an environment move keeps the output
    w = {"x": Fraction(4), "y": Fraction(3), "u": "east", "t": False}
    envstep = {**w, **{k + "'": val for k, val in w.items()}}
    envstep["x'"] = Fraction(6)
    envstep["t'"] = True
    assert evaluate(m.t2_formula, envstep)
    swapped = dict(envstep)
    swapped["u'"] = "west"
    assert not evaluate(m.t2_formula, swapped)


def test_observation_hides_dead_sensor():
    m = robot_model()
    v = State({"x": 4, "y": 3, "u": "east", "t": True})
    obs = observe(v, m)
    assert obs.visible == {"x", "u", "t"}
    assert obs.values["x"] == 4
    full = m.with_full_observation()
    assert observe(v, full).visible == {"x", "y", "u", "t"}
    assert m.hidden_inputs() == (m.var("y"),)


def test_initial_state_satisfies_init_and_is_stable():
    m = robot_model()
    v = initial_state(m, seed=1)
    assert evaluate(m.init, v)
    assert v == initial_state(m, seed=1)
    assert v["x"] == 4 and v["y"] == 3 and v["u"] == "east" and v["t"] is True


def test_sample_successor_follows_moves_and_constraints():
    m = robot_model()
    v = initial_state(m)
    nxt = sample_successor(v, m, enum_eq(prime(m.output), "west"), seed=2)
    assert nxt["u"] == "west" and nxt["t"] is False
    assert nxt["x"] == v["x"] and nxt["y"] == v["y"]
    after = sample_successor(nxt, m, seed=3)
    assert after["u"] == "west" and after["t"] is True
    assert after["x"] == v["x"] - 2
    with pytest.raises(NoSuccessor):
        sample_successor(v, m, linear_atom({prime(m.var("x")): 1}, ">=", 100))


def test_validate_accepts_the_fixture_models():
    assert validate_model(robot_model()).ok
    assert validate_model(counter_model()).ok


def _tiny_parts():
    x = Variable("x", "input", RATIONAL)
    u = Variable("u", "output", ("go", "stop"))
    t = Variable("t", "turn", BOOLEAN)
    xp, up, tp = prime(x), prime(u), prime(t)
    trans = disj(
        conj(bool_var(t), neg(bool_var(tp)), var_eq(xp, x),
             disj(enum_eq(up, "go"), enum_eq(up, "stop"))),
        conj(neg(bool_var(t)), bool_var(tp), var_eq(up, u), var_eq(xp, x)),
    )
    init = conj(linear_atom({x: 1}, "=", 0), enum_eq(u, "go"), bool_var(t))
    return x, u, t, trans, init


def test_validation_flags_init_error_overlap():
    x, u, t, trans, init = _tiny_parts()
    error = bool_var(t)
    report = validate_model(SystemModel([x, u, t], trans, init, error))
    assert any(v.code == "InitError" for v in report.violations)


def test_validation_flags_underconstrained_init():
    x, u, t, trans, _ = _tiny_parts()
    init = conj(linear_atom({x: 1}, "=", 0), bool_var(t))
    report = validate_model(SystemModel([x, u, t], trans, init, FALSE))
    codes = {v.code for v in report.violations}
    assert "InitOutputFree" in codes


def test_validation_flags_observation_split():
    x, u, t, trans, _ = _tiny_parts()
    # two initial positions that a threshold sensor tells apart
    init = conj(
        disj(linear_atom({x: 1}, "=", 0), linear_atom({x: 1}, "=", 5)),
        enum_eq(u, "go"),
        bool_var(t),
    )
    sensor = linear_atom({x: 1}, ">=", 3)
    report = validate_model(SystemModel([x, u, t], trans, init, FALSE, {x: sensor}))
    assert any(v.code == "InitObservationSplit" for v in report.violations)


def test_validation_flags_blocking_and_restricted_moves():
    x, u, t, _, init = _tiny_parts()
    xp, up, tp = prime(x), prime(u), prime(t)
    # the environment has no move when x > 0; the system can never pick "stop"
    trans = disj(
        conj(bool_var(t), neg(bool_var(tp)), var_eq(xp, x), enum_eq(up, "go")),
        conj(neg(bool_var(t)), bool_var(tp), var_eq(up, u),
             var_eq(xp, x), linear_atom({x: 1}, "<=", 0)),
    )
    report = validate_model(SystemModel([x, u, t], trans, init, FALSE))
    codes = {v.code for v in report.violations}
    assert "Blocking" in codes
    assert "SystemMoveRestricted" in codes


def test_validation_flags_scope_leaks():
    x, u, t, trans, init = _tiny_parts()
    ghost = Variable("ghost", "input", RATIONAL)
    report = validate_model(
        SystemModel([x, u, t], trans, init, linear_atom({ghost: 1}, ">=", 1))
    )
    assert any(v.code == "ErrorScope" for v in report.violations)
    report2 = validate_model(
        SystemModel([x, u, t], trans, conj(init, bool_var(prime(t))), FALSE)
    )
    assert any(v.code == "InitScope" for v in report2.violations)
