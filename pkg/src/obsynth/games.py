"""Finite turn-based safety games over indexed states.

The solver computes the player-2 attractor of the unsafe set with breadth-first
ranks.  Player 1 wins from every state outside the attractor and gets a
positional strategy that stays outside; player 2 wins inside and gets a
rank-decreasing strategy.  A tracker concretizes a player-1 strategy against a
symbolic model, which is how synthesized controllers are executed.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from .abstraction import AbstractGame, alpha
from .formulas import Formula, conj, enum_eq, prime, rename
from .model import NoSuccessor, State, SystemModel, sample_successor


class GameError(Exception):
    pass


class ConcretizationFailure(GameError):
    """A concrete run left its abstract strategy; abstraction soundness bug."""


Label = Optional[str]
Edge = Tuple[Label, int]


class FiniteGame:
    """players[i] is 1 or 2; moves[i] lists (label, target) with labels only
    on player-1 edges."""

    def __init__(
        self,
        players: Sequence[int],
        moves: Sequence[Sequence[Edge]],
        initial: int,
        unsafe: Iterable[int],
    ):
        self.players = list(players)
        self.moves: List[List[Edge]] = [list(out) for out in moves]
        self.initial = initial
        self.unsafe = frozenset(unsafe)
        n = len(self.players)
        if len(self.moves) != n:
            raise GameError("players and moves must have equal length")
        self._preds: List[List[int]] = [[] for _ in range(n)]
        for i, out in enumerate(self.moves):
            for _, j in out:
                self._preds[j].append(i)

    def __len__(self) -> int:
        return len(self.players)

    @classmethod
    def from_abstract(cls, game: AbstractGame) -> "FiniteGame":
        moves: List[List[Edge]] = []
        for i, st in enumerate(game.states):
            if st.player == 1:
                moves.append([(sigma, j) for sigma, j in game.edges1.get(i, [])])
            else:
                moves.append([(None, j) for j in game.edges2.get(i, [])])
        return cls(
            [st.player for st in game.states], moves, game.initial, game.unsafe
        )


def attractor(
    g: FiniteGame, target: Iterable[int], player: int
) -> Tuple[FrozenSet[int], Dict[int, int]]:
    """Least set from which ``player`` can force reaching ``target``, with the
    breadth-first level at which each state joins.

    Opponent states without moves are attracted (level 1): a stuck opponent
    cannot avoid anything.
    """
    rank: Dict[int, int] = {s: 0 for s in target}
    inside = set(rank)
    remaining = {
        i: len(g.moves[i])
        for i in range(len(g))
        if i not in inside and g.players[i] != player
    }
    queue = deque(sorted(inside))
    for i, count in sorted(remaining.items()):
        if count == 0:
            inside.add(i)
            rank[i] = 1
            queue.append(i)
    while queue:
        s = queue.popleft()
        for p in g._preds[s]:
            if p in inside:
                continue
            if g.players[p] == player:
                inside.add(p)
                rank[p] = rank[s] + 1
                queue.append(p)
            else:
                remaining[p] -= 1
                if remaining[p] == 0:
                    inside.add(p)
                    rank[p] = rank[s] + 1
                    queue.append(p)
    return frozenset(inside), rank


class PositionalStrategy:
    def __init__(
        self,
        owner: int,
        moves: Dict[int, Edge],
        region: FrozenSet[int],
        ranks: Optional[Dict[int, int]] = None,
    ):
        self.owner = owner
        self.moves = moves
        self.region = region
        self.ranks = ranks or {}

    def move(self, state: int) -> Edge:
        try:
            return self.moves[state]
        except KeyError:
            raise GameError(f"strategy undefined at state {state}") from None


class Winner:
    def __init__(self, player: int, strategy: PositionalStrategy):
        self.player = player
        self.strategy = strategy


def solve_safety(g: FiniteGame) -> Winner:
    """Decide the safety game from the initial state; the loser of the
    attractor computation never receives a strategy."""
    attr, rank = attractor(g, g.unsafe, player=2)
    if g.initial in attr:
        moves: Dict[int, Edge] = {}
        for i in sorted(attr):
            if g.players[i] != 2 or i in g.unsafe:
                continue
            best: Optional[Edge] = None
            for label, j in g.moves[i]:
                if j in attr and (best is None or rank[j] < rank[best[1]]):
                    best = (label, j)
            if best is not None:
                moves[i] = best
        return Winner(2, PositionalStrategy(2, moves, attr, rank))
    moves = {}
    for i in range(len(g)):
        if g.players[i] != 1 or i in attr:
            continue
        for label, j in g.moves[i]:
            if j not in attr:
                moves[i] = (label, j)
                break
    return Winner(1, PositionalStrategy(1, moves, frozenset(range(len(g))) - attr))


def error_distances(g: FiniteGame) -> Dict[int, int]:
    """Undirected-control distance to the unsafe set; a pressure heuristic for
    adversarial simulation, not a correctness ingredient."""
    dist = {s: 0 for s in g.unsafe}
    queue = deque(sorted(g.unsafe))
    while queue:
        s = queue.popleft()
        for p in g._preds[s]:
            if p not in dist:
                dist[p] = dist[s] + 1
                queue.append(p)
    return dist


class StrategyTracker:
    """Walks a concrete run while following a player-1 strategy through the
    abstract game; the chosen output depends only on the abstract location,
    which evolves by observations alone."""

    def __init__(self, game: AbstractGame, strategy: PositionalStrategy, m: SystemModel):
        if strategy.owner != 1:
            raise GameError("tracker needs a player-1 strategy")
        self.game = game
        self.strategy = strategy
        self.model = m
        self.abstraction = game.abstraction
        self.current = game.initial
        self._prime_map = {v: prime(v) for v in m.variables}

    def _primed_state_cube(self, j: int) -> Formula:
        return rename(
            self.abstraction.state_formula(self.game.states[j]), self._prime_map
        )

    def location(self) -> int:
        return self.current

    def system_move(self, v: State, seed: int = 0) -> State:
        sigma, j = self.strategy.move(self.current)
        constraint = conj(
            enum_eq(prime(self.model.output), sigma), self._primed_state_cube(j)
        )
        try:
            nxt = sample_successor(v, self.model, constraint, seed)
        except NoSuccessor as exc:
            raise ConcretizationFailure(
                f"strategy move {sigma} at abstract state {self.current} has no "
                f"concrete successor from {v!r}"
            ) from exc
        self.current = j
        return nxt

    def advance_environment(self, v_next: State) -> int:
        bits = alpha(v_next, self.abstraction.pset)
        for j in self.game.edges2.get(self.current, []):
            if bits in self.game.states[j].members:
                self.current = j
                return j
        raise ConcretizationFailure(
            f"environment step left the abstract game at state {self.current}"
        )


def concretize_step(tracker: StrategyTracker, v: State, seed: int = 0) -> State:
    return tracker.system_move(v, seed)
