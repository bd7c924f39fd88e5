"""Closed-loop execution of a synthesized controller.

Each run alternates the controller's move (concretized through the abstract
strategy) with an environment move picked by an adversary policy.  The random
adversary shuffles the abstract successor classes; the attractor adversary
prefers classes closest to the error states.  Either way the concrete
successor is sampled inside the chosen class, so runs stay faithful to the
abstraction while exercising varied numeric behaviour.  Fixing the seed fixes
the entire run.
"""

from __future__ import annotations

import random
from typing import Dict, List, Optional, Tuple

from .abstraction import AbstractGame
from .formulas import conj, evaluate, prime, rename
from .games import (
    ConcretizationFailure,
    FiniteGame,
    PositionalStrategy,
    StrategyTracker,
    error_distances,
)
from .model import (
    NoSuccessor,
    Observation,
    State,
    SystemModel,
    initial_state,
    observe,
    sample_successor,
)

ADVERSARIES = ("random", "attractor")

Step = Tuple[State, Observation, Optional[str]]


class RunRecord:
    """States in visiting order, the observation at each, and the output
    chosen there (None on environment moves)."""

    def __init__(self, steps: List[Step], verdict: str, error_step: Optional[int]):
        self.steps = steps
        self.verdict = verdict
        self.error_step = error_step

    @property
    def safe(self) -> bool:
        return self.error_step is None

    def __repr__(self) -> str:
        return f"RunRecord({len(self.steps)} steps, {self.verdict})"


def _class_order(
    candidates: List[int],
    adversary: str,
    rng: random.Random,
    distances: Dict[int, int],
) -> List[int]:
    order = list(candidates)
    if adversary == "random":
        rng.shuffle(order)
    else:
        order.sort(key=lambda j: (distances.get(j, len(distances) + 1), j))
    return order


def run_strategy(
    m: SystemModel,
    game: AbstractGame,
    strategy: PositionalStrategy,
    steps: int = 100,
    seed: int = 0,
    adversary: str = "random",
    distances: Optional[Dict[int, int]] = None,
) -> RunRecord:
    if adversary not in ADVERSARIES:
        raise ValueError(f"unknown adversary {adversary!r}")
    if adversary == "attractor" and distances is None:
        distances = error_distances(FiniteGame.from_abstract(game))
    rng = random.Random(seed)
    tracker = StrategyTracker(game, strategy, m)
    abstraction = game.abstraction
    prime_map = {v: prime(v) for v in m.variables}

    v = initial_state(m, seed=seed)
    trail: List[Step] = []

    for k in range(steps):
        if evaluate(m.error, v):
            trail.append((v, observe(v, m), None))
            return RunRecord(trail, f"error-at-step-{k}", k)
        if m.is_system_turn(v):
            obs = observe(v, m)
            nxt = tracker.system_move(v, seed=rng.randrange(1 << 30))
            sigma = nxt[m.output.name]
            trail.append((v, obs, sigma))
            v = nxt
            continue
        candidates = game.edges2.get(tracker.location(), [])
        order = _class_order(candidates, adversary, rng, distances or {})
        nxt = None
        for j in order:
            cube = rename(abstraction.state_formula(game.states[j]), prime_map)
            try:
                nxt = sample_successor(v, m, cube, seed=rng.randrange(1 << 30))
                break
            except NoSuccessor:
                continue
        if nxt is None:
            nxt = sample_successor(v, m, seed=rng.randrange(1 << 30))
        trail.append((v, observe(v, m), None))
        tracker.advance_environment(nxt)
        v = nxt

    if evaluate(m.error, v):
        trail.append((v, observe(v, m), None))
        return RunRecord(trail, f"error-at-step-{steps}", steps)
    trail.append((v, observe(v, m), None))
    return RunRecord(trail, "safe", None)


def run_many(
    m: SystemModel,
    game: AbstractGame,
    strategy: PositionalStrategy,
    runs: int,
    steps: int = 100,
    seed: int = 0,
    adversary: str = "random",
) -> List[RunRecord]:
    distances = None
    if adversary == "attractor":
        distances = error_distances(FiniteGame.from_abstract(game))
    return [
        run_strategy(
            m,
            game,
            strategy,
            steps=steps,
            seed=seed + i,
            adversary=adversary,
            distances=distances,
        )
        for i in range(runs)
    ]
