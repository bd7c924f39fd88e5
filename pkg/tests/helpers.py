"""Shared model builders for the test suite."""

from fractions import Fraction

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
    linear_atom,
    neg,
    prime,
)
from obsynth.model import SystemModel

ROBOT_SIGMA = ("east", "west", "north", "south")


def shift_eq(a, b, c=0):
    """a = b + c as a linear atom."""
    return linear_atom({a: 1, b: -1}, "=", c)


def robot_model() -> SystemModel:
    """Planar robot with a dead vertical sensor.

    Moves east/west shift x by exactly 2; north/south drift y by a
    nondeterministic amount in [1, 3/2].  The y coordinate is never
    observable, x always is.  The error region is leaving the rectangle
    -1 < x < 9, -4 < y < 4, sampled on environment states.
    """
    x = Variable("x", "input", RATIONAL)
    y = Variable("y", "input", RATIONAL)
    u = Variable("u", "output", ROBOT_SIGMA)
    t = Variable("t", "turn", BOOLEAN)
    xp, yp = prime(x), prime(y)
    up, tp = prime(u), prime(t)

    trans = disj(
        conj(
            bool_var(t),
            neg(bool_var(tp)),
            shift_eq(xp, x),
            shift_eq(yp, y),
            disj(*(enum_eq(up, s) for s in ROBOT_SIGMA)),
        ),
        conj(
            neg(bool_var(t)),
            bool_var(tp),
            disj(
                conj(enum_eq(u, "east"), shift_eq(xp, x, 2), shift_eq(yp, y)),
                conj(enum_eq(u, "west"), shift_eq(xp, x, -2), shift_eq(yp, y)),
                conj(
                    enum_eq(u, "north"),
                    shift_eq(xp, x),
                    linear_atom({yp: 1, y: -1}, ">=", 1),
                    linear_atom({yp: 1, y: -1}, "<=", Fraction(3, 2)),
                ),
                conj(
                    enum_eq(u, "south"),
                    shift_eq(xp, x),
                    linear_atom({yp: 1, y: -1}, "<=", -1),
                    linear_atom({yp: 1, y: -1}, ">=", Fraction(-3, 2)),
                ),
            ),
        ),
    )
    init = conj(
        linear_atom({x: 1}, "=", 4),
        linear_atom({y: 1}, "=", 3),
        enum_eq(u, "east"),
        bool_var(t),
    )
    error = conj(
        neg(bool_var(t)),
        disj(
            linear_atom({x: 1}, ">=", 9),
            linear_atom({y: 1}, ">=", 4),
            linear_atom({x: 1}, "<=", -1),
            linear_atom({y: 1}, "<=", -4),
        ),
    )
    return SystemModel([x, y, u, t], trans, init, error, {y: FALSE})


def echo_model() -> SystemModel:
    """Hidden bit echoed into a visible register one round late.

    The environment fixes y at 0 or 1 initially and never changes it; every
    environment step copies y into the visible register c (initially -1).
    Once c holds a real reading the controller errs unless its output names
    the bit (low for 0, high for 1).  Winning therefore requires a predicate
    over c, which only observation refinement can introduce.
    """
    y = Variable("y", "input", RATIONAL)
    c = Variable("c", "input", RATIONAL)
    u = Variable("u", "output", ("wait", "low", "high"))
    t = Variable("t", "turn", BOOLEAN)
    yp, cp = prime(y), prime(c)
    up, tp = prime(u), prime(t)

    trans = disj(
        conj(
            bool_var(t),
            neg(bool_var(tp)),
            shift_eq(yp, y),
            shift_eq(cp, c),
            disj(*(enum_eq(up, s) for s in u.sort)),
        ),
        conj(
            neg(bool_var(t)),
            bool_var(tp),
            shift_eq(yp, y),
            shift_eq(cp, y),
        ),
    )
    init = conj(
        disj(linear_atom({y: 1}, "=", 0), linear_atom({y: 1}, "=", 1)),
        linear_atom({c: 1}, "=", -1),
        enum_eq(u, "wait"),
        bool_var(t),
    )
    error = conj(
        neg(bool_var(t)),
        linear_atom({c: 1}, ">=", 0),
        disj(
            conj(linear_atom({y: 1}, "<=", 0), neg(enum_eq(u, "low"))),
            conj(linear_atom({y: 1}, ">=", 1), neg(enum_eq(u, "high"))),
        ),
    )
    return SystemModel([y, c, u, t], trans, init, error, {y: FALSE, c: TRUE})


def counter_model(bound: int = 3) -> SystemModel:
    """Hidden counter that the environment increments every round.

    No output has any effect, so the error h >= bound is unavoidable even
    with full observation.  Useful as a guaranteed-infeasible fixture; the
    bound controls how many rounds the doomed play lasts.
    """
    h = Variable("h", "input", RATIONAL)
    u = Variable("u", "output", ("brake", "coast"))
    t = Variable("t", "turn", BOOLEAN)
    hp, up, tp = prime(h), prime(u), prime(t)

    trans = disj(
        conj(bool_var(t), neg(bool_var(tp)), shift_eq(hp, h)),
        conj(
            neg(bool_var(t)),
            bool_var(tp),
            disj(*(conj(enum_eq(u, s), enum_eq(up, s)) for s in u.sort)),
            shift_eq(hp, h, 1),
        ),
    )
    init = conj(linear_atom({h: 1}, "=", 0), enum_eq(u, "coast"), bool_var(t))
    error = conj(neg(bool_var(t)), linear_atom({h: 1}, ">=", bound))
    return SystemModel([h, u, t], trans, init, error, {h: FALSE})


def assert_act_well_formed(act):
    """Check the construction rules of a counterexample tree.

    Root at the initial state, one parent per node, player-1 nodes branch on
    exactly the admitted game edges, player-2 nodes follow the strategy's
    single move, leaves sit on unsafe or stuck states, and the attractor rank
    drops along every edge (which bounds the depth).
    """
    game, strategy = act.game, act.strategy
    ranks = strategy.ranks
    root = act.root
    assert root is act.nodes[0]
    assert root.parent is None and root.sigma_in is None
    assert root.state_index == game.initial

    seen_as_child = set()
    for node in act.nodes:
        assert node.label is game.states[node.state_index]
        for label, child in node.children:
            assert child.parent is node
            assert child.sigma_in == label
            assert child.id not in seen_as_child
            seen_as_child.add(child.id)
            assert ranks[child.state_index] < ranks[node.state_index]
        if node.is_leaf:
            stuck = (
                not game.edges2.get(node.state_index)
                if node.label.player == 2
                else not game.edges1.get(node.state_index)
            )
            assert node.state_index in game.unsafe or stuck
            assert act.traces(node) == ((),)
        elif node.label.player == 1:
            got = [(label, c.state_index) for label, c in node.children]
            assert got == list(game.edges1.get(node.state_index, []))
        else:
            ((label, child),) = node.children
            assert label is None
            assert child.state_index == strategy.move(node.state_index)[1]
    assert seen_as_child == {n.id for n in act.nodes} - {root.id}

    for node in act.nodes:
        if not node.is_leaf:
            continue
        depth = 0
        walk = node
        while walk.parent is not None:
            depth += 1
            walk = walk.parent
        assert depth <= ranks[game.initial]
