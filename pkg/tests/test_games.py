"""Finite safety games: attractor, solver, and strategy tracking."""

import random
from pathlib import Path

import pytest

from helpers import robot_model
from obsynth.abstraction import build_abstract_game, initial_predicates
from obsynth.formulas import evaluate
from obsynth.games import (
    ConcretizationFailure,
    FiniteGame,
    GameError,
    PositionalStrategy,
    StrategyTracker,
    attractor,
    error_distances,
    solve_safety,
)
from obsynth.model import initial_state, sample_successor
from obsynth.specfile import parse_model

BENCH = Path(__file__).resolve().parent.parent / "benchmarks"


def chain_game():
    """0 -> 1 -> 2 -> 3, all player 2, state 3 unsafe."""
    moves = [[(None, 1)], [(None, 2)], [(None, 3)], []]
    return FiniteGame([2, 2, 2, 2], moves, 0, [3])


def diamond_game():
    """Player 1 at the root chooses between a doomed and a safe loop."""
    moves = [
        [("a", 1), ("b", 2)],
        [(None, 3)],
        [(None, 4)],
        [],
        [(None, 0)],
    ]
    return FiniteGame([1, 2, 2, 2, 2], moves, 0, [3])


def test_attractor_ranks_on_a_chain():
    g = chain_game()
    inside, rank = attractor(g, g.unsafe, player=2)
    assert inside == frozenset({0, 1, 2, 3})
    assert rank == {3: 0, 2: 1, 1: 2, 0: 3}


def test_attractor_respects_player_one_choice():
    g = diamond_game()
    inside, rank = attractor(g, g.unsafe, player=2)
    assert inside == frozenset({1, 3})
    assert rank[1] == 1


def test_stuck_opponent_is_attracted():
    g = FiniteGame([1, 2], [[], [(None, 0)]], 1, [])
    inside, rank = attractor(g, [], player=2)
    assert 0 in inside
    assert rank[0] == 1
    assert 1 in inside


def test_solver_on_the_diamond():
    g = diamond_game()
    won = solve_safety(g)
    assert won.player == 1
    assert won.strategy.move(0) == ("b", 2)
    assert won.strategy.region == frozenset({0, 2, 4})
    with pytest.raises(GameError):
        won.strategy.move(1)


def test_solver_on_the_chain():
    won = solve_safety(chain_game())
    assert won.player == 2
    assert won.strategy.owner == 2
    for i, (label, j) in won.strategy.moves.items():
        assert label is None
        assert won.strategy.ranks[j] < won.strategy.ranks[i]


def test_error_distances_ignore_control():
    g = diamond_game()
    assert error_distances(g) == {3: 0, 1: 1, 0: 2, 4: 3, 2: 4}


def test_mismatched_lengths_rejected():
    with pytest.raises(GameError):
        FiniteGame([1, 2], [[]], 0, [])


def _strategy_region_is_closed(g, won):
    """Follow the winning strategy from the initial state and make sure the
    play can never leave the winning region or touch the unsafe set."""
    seen = {g.initial}
    frontier = [g.initial]
    while frontier:
        i = frontier.pop()
        assert i in won.strategy.region
        assert i not in g.unsafe
        if g.players[i] == 1:
            targets = [won.strategy.move(i)[1]]
        else:
            targets = [j for _, j in g.moves[i]]
        for j in targets:
            if j not in seen:
                seen.add(j)
                frontier.append(j)


def _naive_losing_set(g):
    """Reference fixpoint: grow the set of doomed states until stable."""
    bad = set(g.unsafe)
    changed = True
    while changed:
        changed = False
        for i in range(len(g)):
            if i in bad:
                continue
            targets = [j for _, j in g.moves[i]]
            if g.players[i] == 1:
                # A stuck system state loses: all() over no moves is True.
                doomed = all(j in bad for j in targets)
            else:
                # A stuck environment state never reaches the error.
                doomed = any(j in bad for j in targets)
            if doomed:
                bad.add(i)
                changed = True
    return bad


def _random_game(rng):
    n = rng.randrange(2, 14)
    players = [rng.choice((1, 2)) for _ in range(n)]
    moves = []
    for i in range(n):
        out = []
        for _ in range(rng.randrange(0, 4)):
            j = rng.randrange(n)
            label = f"m{j}" if players[i] == 1 else None
            out.append((label, j))
        moves.append(out)
    unsafe = {i for i in range(n) if rng.random() < 0.2}
    return FiniteGame(players, moves, 0, unsafe)


def test_solver_agrees_with_naive_fixpoint_on_random_games():
    rng = random.Random(2026)
    for _ in range(300):
        g = _random_game(rng)
        won = solve_safety(g)
        bad = _naive_losing_set(g)
        assert (won.player == 2) == (g.initial in bad)
        if won.player == 1:
            _strategy_region_is_closed(g, won)


def _permuted(g, pi):
    inv = sorted(range(len(g)), key=lambda i: pi[i])
    players = [g.players[i] for i in inv]
    moves = [[(label, pi[j]) for label, j in g.moves[i]] for i in inv]
    return FiniteGame(players, moves, pi[g.initial], {pi[i] for i in g.unsafe})


def test_solution_commutes_with_state_relabeling():
    rng = random.Random(11)
    for _ in range(120):
        g = _random_game(rng)
        pi = list(range(len(g)))
        rng.shuffle(pi)
        h = _permuted(g, pi)
        a, b = solve_safety(g), solve_safety(h)
        assert a.player == b.player
        assert {pi[i] for i in a.strategy.region} == b.strategy.region
        assert {
            pi[i]: (label, pi[j]) for i, (label, j) in a.strategy.moves.items()
        } == b.strategy.moves


def test_initial_robot_abstraction_is_lost():
    """With only the starting predicates the environment wins the knowledge
    game; later refinement is what makes the robot controllable."""
    m = robot_model()
    game = build_abstract_game(m, initial_predicates(m))
    won = solve_safety(FiniteGame.from_abstract(game))
    assert won.player == 2
    for i, (_, j) in won.strategy.moves.items():
        assert won.strategy.ranks[j] < won.strategy.ranks[i]


def test_tracker_follows_a_winning_strategy():
    m = parse_model((BENCH / "case2.spec").read_text())
    game = build_abstract_game(m, initial_predicates(m))
    won = solve_safety(FiniteGame.from_abstract(game))
    assert won.player == 1

    for seed in (0, 5):
        tracker = StrategyTracker(game, won.strategy, m)
        v = initial_state(m, seed=seed)
        rng = random.Random(seed)
        for step in range(25):
            v = tracker.system_move(v, seed=rng.randrange(10 ** 6))
            assert not evaluate(m.error, v)
            v = sample_successor(v, m, seed=rng.randrange(10 ** 6))
            loc = tracker.advance_environment(v)
            assert loc not in game.unsafe
            assert not evaluate(m.error, v)


def test_tracker_rejects_environment_strategies():
    m = robot_model()
    game = build_abstract_game(m, initial_predicates(m))
    won = solve_safety(FiniteGame.from_abstract(game))
    assert won.player == 2
    with pytest.raises(GameError):
        StrategyTracker(game, won.strategy, m)


def test_tracker_reports_departures():
    m = parse_model((BENCH / "case2.spec").read_text())
    game = build_abstract_game(m, initial_predicates(m))
    won = solve_safety(FiniteGame.from_abstract(game))
    tracker = StrategyTracker(game, won.strategy, m)
    with pytest.raises(ConcretizationFailure):
        tracker.advance_environment(initial_state(m))
