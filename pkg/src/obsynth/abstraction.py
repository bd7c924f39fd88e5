"""Predicate abstraction with knowledge-based subset construction.

Concrete states are mapped to truth vectors over an ordered predicate set;
vectors that the system cannot tell apart are grouped into knowledge states.
The resulting finite game has complete information: player 1 edges carry the
chosen output symbol and use must semantics (every consistent concrete state
can make the move), player 2 edges use may semantics.
"""

from __future__ import annotations

from collections import deque
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import engine
from .formulas import (
    TRUE,
    Atom,
    BoolAtom,
    EnumAtom,
    Formula,
    LinearAtom,
    Lit,
    Value,
    Variable,
    atom_to_str,
    conj,
    disj,
    enum_eq,
    eval_atom,
    eval_with_atoms,
    free_vars,
    literals_in,
    neg,
    prime,
    rename,
    to_nnf,
)
from .formulas import AtomNotCovered
from .model import State, SystemModel

Bits = Tuple[bool, ...]


class AbstractionError(Exception):
    pass


class IllFormed(AbstractionError):
    """A hypothesis of the abstraction is violated (for example the sensor
    predicates are missing from the predicate set)."""


class EmptyInitial(AbstractionError):
    pass


def bits_str(bits: Bits) -> str:
    return "".join("1" if b else "0" for b in bits)


class Predicate:
    """One tracked literal; a bit value of 1 means the literal holds."""

    __slots__ = ("atom", "positive")

    def __init__(self, atom: Atom, positive: bool = True):
        self.atom = atom
        self.positive = positive

    def formula(self, value: bool = True) -> Formula:
        return Lit(self.atom, self.positive == value)

    def holds_at(self, v: Mapping[str, Value]) -> bool:
        return eval_atom(self.atom, v) == self.positive

    def atom_truth(self, bit: bool) -> bool:
        return bit if self.positive else not bit

    def variables(self) -> FrozenSet[Variable]:
        return free_vars(Lit(self.atom, True))

    def __eq__(self, other) -> bool:
        if isinstance(other, Predicate):
            return self.atom == other.atom and self.positive == other.positive
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.atom, self.positive))

    def __str__(self) -> str:
        text = atom_to_str(self.atom)
        return text if self.positive else f"not({text})"

    def __repr__(self) -> str:
        return f"Predicate({self})"


class PredicateSet:
    """Ordered, atom-deduplicated predicate list; new predicates only append."""

    def __init__(self, predicates: Iterable[Predicate] = ()):
        self.predicates: List[Predicate] = []
        self._atom_index: Dict[Atom, int] = {}
        for p in predicates:
            self._add(p)

    def _add(self, p: Predicate) -> None:
        if p.atom not in self._atom_index:
            self._atom_index[p.atom] = len(self.predicates)
            self.predicates.append(p)

    def __len__(self) -> int:
        return len(self.predicates)

    def __iter__(self):
        return iter(self.predicates)

    def __getitem__(self, i: int) -> Predicate:
        return self.predicates[i]

    def index_of(self, atom: Atom) -> Optional[int]:
        return self._atom_index.get(atom)

    def extended(self, literals: Iterable[Tuple[Atom, bool]]) -> "PredicateSet":
        out = PredicateSet(self.predicates)
        for atom, positive in literals:
            out._add(Predicate(atom, positive))
        return out

    def extended_with_atoms_of(self, f: Formula) -> "PredicateSet":
        return self.extended(literals_in(to_nnf(f)))

    def atom_truth(self, bits: Bits) -> Dict[Atom, bool]:
        return {
            p.atom: p.atom_truth(bits[i]) for i, p in enumerate(self.predicates)
        }

    def describe(self) -> List[str]:
        return [str(p) for p in self.predicates]


def initial_predicates(m: SystemModel) -> PredicateSet:
    """Error-formula literals, then sensor literals, then one predicate per
    output symbol, then the turn flag."""
    turn_atom = BoolAtom(m.turn)
    pset = PredicateSet()
    first: List[Predicate] = []
    for atom, positive in literals_in(to_nnf(m.error)):
        if atom == turn_atom:
            continue
        if isinstance(atom, EnumAtom) and atom.var == m.output:
            continue
        first.append(Predicate(atom, positive))
    for p in first:
        pset._add(p)
    for x in m.inputs:
        for atom, positive in literals_in(to_nnf(m.sensors[x])):
            pset._add(Predicate(atom, positive))
    for symbol in m.alphabet:
        pset._add(Predicate(EnumAtom(m.output, symbol), True))
    pset._add(Predicate(turn_atom, True))
    return pset


def alpha(v: State, pset: PredicateSet) -> Bits:
    return tuple(p.holds_at(v) for p in pset)


class AbstractState:
    """A set of observation-equivalent bit vectors (one knowledge state)."""

    __slots__ = ("members", "player", "visible_inputs", "_formula")

    def __init__(
        self,
        members: Sequence[Bits],
        player: int,
        visible_inputs: FrozenSet[str],
    ):
        self.members: Tuple[Bits, ...] = tuple(sorted(set(members)))
        if not self.members:
            raise AbstractionError("abstract state needs at least one vector")
        self.player = player
        self.visible_inputs = visible_inputs
        self._formula: Optional[Formula] = None

    def key(self) -> Tuple[Bits, ...]:
        return self.members

    def __repr__(self) -> str:
        inner = ",".join(bits_str(s) for s in self.members)
        return f"{{{inner}}}"


class Abstraction:
    """Shared machinery for one (model, predicate set) pair, with caches."""

    def __init__(self, m: SystemModel, pset: PredicateSet):
        self.model = m
        self.pset = pset
        self.prime_map = {v: prime(v) for v in m.variables}
        self.turn_index = pset.index_of(BoolAtom(m.turn))
        if self.turn_index is None:
            raise IllFormed("turn predicate missing from the predicate set")
        for symbol in m.alphabet:
            if pset.index_of(EnumAtom(m.output, symbol)) is None:
                raise IllFormed(f"output predicate for {symbol} missing")
        for x in m.inputs:
            for atom in (
                a for a, _ in literals_in(to_nnf(m.sensors[x]))
            ):
                if pset.index_of(atom) is None:
                    raise IllFormed(
                        f"sensor predicate {atom_to_str(atom)} missing"
                    )
        self._out_index = {
            s: pset.index_of(EnumAtom(m.output, s)) for s in m.alphabet
        }
        self._cube: Dict[Bits, Formula] = {}
        self._cube_primed: Dict[Bits, Formula] = {}
        self._visible: Dict[Bits, FrozenSet[str]] = {}
        self._obs_idx: Dict[FrozenSet[str], Tuple[int, ...]] = {}
        self._pre1: Dict[Tuple[str, Tuple[Bits, ...]], Formula] = {}
        self._post2: Dict[Bits, Tuple[Bits, ...]] = {}
        self._kind: List[str] = []
        for p in pset:
            pvars = p.variables()
            if m.turn in pvars:
                self._kind.append("turn")
            elif m.output in pvars:
                self._kind.append("output")
            else:
                self._kind.append("input")

    # -- cubes ---------------------------------------------------------

    def cube(self, bits: Bits) -> Formula:
        got = self._cube.get(bits)
        if got is None:
            got = conj(*(p.formula(bits[i]) for i, p in enumerate(self.pset)))
            self._cube[bits] = got
        return got

    def cube_primed(self, bits: Bits) -> Formula:
        got = self._cube_primed.get(bits)
        if got is None:
            got = rename(self.cube(bits), self.prime_map)
            self._cube_primed[bits] = got
        return got

    def state_formula(self, state: AbstractState) -> Formula:
        if state._formula is None:
            state._formula = disj(*(self.cube(s) for s in state.members))
        return state._formula

    # -- observation machinery ------------------------------------------

    def visible_inputs(self, bits: Bits) -> FrozenSet[str]:
        got = self._visible.get(bits)
        if got is None:
            truth = self.pset.atom_truth(bits)
            shown = []
            for x in self.model.inputs:
                try:
                    if eval_with_atoms(self.model.sensors[x], truth):
                        shown.append(x.name)
                except AtomNotCovered as exc:
                    raise IllFormed(
                        f"sensor formula atom outside predicate set: {exc}"
                    ) from None
            got = frozenset(shown)
            self._visible[bits] = got
        return got

    def observable_indices(self, visible: FrozenSet[str]) -> Tuple[int, ...]:
        got = self._obs_idx.get(visible)
        if got is None:
            names = set(visible) | {self.model.output.name, self.model.turn.name}
            got = tuple(
                i
                for i, p in enumerate(self.pset)
                if all(v.name in names for v in p.variables())
            )
            self._obs_idx[visible] = got
        return got

    def obs_key(self, bits: Bits):
        visible = self.visible_inputs(bits)
        idx = self.observable_indices(visible)
        return (visible, tuple(bits[i] for i in idx))

    def obs_equiv(self, a: Bits, b: Bits) -> bool:
        return self.obs_key(a) == self.obs_key(b)

    def make_state(self, members: Sequence[Bits]) -> AbstractState:
        keys = {self.obs_key(s) for s in members}
        if len(keys) != 1:
            raise IllFormed(
                "observation-inequivalent vectors grouped into one state"
            )
        (visible, _) = next(iter(keys))
        player = 1 if members[0][self.turn_index] else 2
        return AbstractState(members, player, visible)

    # -- vector enumeration ---------------------------------------------

    def _all_sat_vectors(self, base: Formula, primed: bool) -> List[Bits]:
        """All predicate truth vectors consistent with ``base``."""
        if engine.check_sat(base) is None:
            return []
        out: List[Bits] = []
        lits = self._cube_literals(primed)
        acc: List[bool] = []

        def walk(i: int, g: Formula) -> None:
            if i == len(self.pset):
                out.append(tuple(acc))
                return
            for val in (False, True):
                h = conj(g, lits[i][val])
                if engine.check_sat(h) is not None:
                    acc.append(val)
                    walk(i + 1, h)
                    acc.pop()

        walk(0, base)
        return out

    def _cube_literals(self, primed: bool):
        lits = []
        for p in self.pset:
            pos = p.formula(True)
            negf = p.formula(False)
            if primed:
                pos = rename(pos, self.prime_map)
                negf = rename(negf, self.prime_map)
            lits.append({True: pos, False: negf})
        return lits

    # -- preconditions ---------------------------------------------------

    def pre1(self, sigma: str, f: Formula) -> Formula:
        primed = list(self.model.primed_vars)
        return engine.eliminate_exists(
            primed,
            conj(
                self.model.t1_formula,
                enum_eq(prime(self.model.output), sigma),
                rename(f, self.prime_map),
            ),
        )

    def pre2(self, f: Formula) -> Formula:
        primed = list(self.model.primed_vars)
        return engine.eliminate_exists(
            primed, conj(self.model.t2_formula, rename(f, self.prime_map))
        )

    def _pre1_of_state(self, sigma: str, target: AbstractState) -> Formula:
        key = (sigma, target.key())
        got = self._pre1.get(key)
        if got is None:
            got = self.pre1(sigma, self.state_formula(target))
            self._pre1[key] = got
        return got

    # -- per-state successors --------------------------------------------

    def is_unsafe(self, state: AbstractState) -> bool:
        for s in state.members:
            try:
                if eval_with_atoms(self.model.error, self.pset.atom_truth(s)):
                    return True
            except AtomNotCovered as exc:
                raise IllFormed(
                    f"error formula atom outside predicate set: {exc}"
                ) from None
        return False

    def player1_successor(self, s: Bits, sigma: str) -> Bits:
        """Deterministic target vector of a system move: inputs keep their
        bits, the output predicates follow sigma, the turn flips to false."""
        out = []
        for i, p in enumerate(self.pset):
            kind = self._kind[i]
            if kind == "input":
                out.append(s[i])
            elif kind == "turn":
                out.append(not p.positive)
            else:
                atom = p.atom
                holds = isinstance(atom, EnumAtom) and atom.symbol == sigma
                out.append(holds == p.positive)
        return tuple(out)

    def player1_moves(
        self, state: AbstractState
    ) -> List[Tuple[str, AbstractState]]:
        """Admitted (sigma, successor) pairs under must semantics."""
        moves: List[Tuple[str, AbstractState]] = []
        for sigma in self.model.alphabet:
            targets = sorted({self.player1_successor(s, sigma) for s in state.members})
            target = self.make_state(targets)
            admitted = True
            for s in state.members:
                pre = self._pre1_of_state(sigma, target)
                if not engine.entails(self.cube(s), pre):
                    admitted = False
                    break
            if admitted:
                moves.append((sigma, target))
        return moves

    def player2_post(self, s: Bits) -> Tuple[Bits, ...]:
        got = self._post2.get(s)
        if got is None:
            base = conj(self.cube(s), self.model.t2_formula)
            got = tuple(self._all_sat_vectors(base, primed=True))
            self._post2[s] = got
        return got

    def player2_moves(self, state: AbstractState) -> List[AbstractState]:
        """Successor knowledge states: reachable vectors grouped by observation."""
        reached = set()
        for s in state.members:
            reached.update(self.player2_post(s))
        classes: Dict[object, List[Bits]] = {}
        for s in sorted(reached):
            classes.setdefault(self.obs_key(s), []).append(s)
        return [self.make_state(v) for _, v in sorted(classes.items(), key=lambda kv: kv[1][0])]

    def initial_state(self) -> AbstractState:
        members = self._all_sat_vectors(self.model.init, primed=False)
        if not members:
            raise EmptyInitial("no predicate vector is consistent with init")
        keys = {self.obs_key(s) for s in members}
        if len(keys) != 1:
            raise IllFormed("initial vectors span several observation classes")
        return self.make_state(members)


class AbstractGame:
    """Reachable fragment of the knowledge game, in discovery order."""

    def __init__(
        self,
        abstraction: Abstraction,
        states: List[AbstractState],
        edges1: Dict[int, List[Tuple[str, int]]],
        edges2: Dict[int, List[int]],
        unsafe: FrozenSet[int],
    ):
        self.abstraction = abstraction
        self.states = states
        self.edges1 = edges1
        self.edges2 = edges2
        self.unsafe = unsafe
        self.initial = 0

    def __len__(self) -> int:
        return len(self.states)

    def player(self, i: int) -> int:
        return self.states[i].player

    def successors(self, i: int) -> List[int]:
        if self.states[i].player == 1:
            return [j for _, j in self.edges1.get(i, [])]
        return list(self.edges2.get(i, []))

    def dump(self) -> dict:
        return {
            "predicates": self.abstraction.pset.describe(),
            "states": [
                {
                    "id": i,
                    "player": st.player,
                    "members": [bits_str(s) for s in st.members],
                    "unsafe": i in self.unsafe,
                }
                for i, st in enumerate(self.states)
            ],
            "edges": sorted(
                [[i, sigma, j] for i, out in self.edges1.items() for sigma, j in out]
                + [[i, "", j] for i, out in self.edges2.items() for j in out]
            ),
        }


def build_abstract_game(
    m: SystemModel, pset: PredicateSet, max_states: int = 10 ** 6
) -> AbstractGame:
    ab = Abstraction(m, pset)
    root = ab.initial_state()
    states: List[AbstractState] = [root]
    index: Dict[Tuple[Bits, ...], int] = {root.key(): 0}
    edges1: Dict[int, List[Tuple[str, int]]] = {}
    edges2: Dict[int, List[int]] = {}
    unsafe = set()
    frontier = deque([0])
    while frontier:
        i = frontier.popleft()
        state = states[i]
        if ab.is_unsafe(state):
            unsafe.add(i)
            continue

        def intern(st: AbstractState) -> int:
            j = index.get(st.key())
            if j is None:
                j = len(states)
                if j >= max_states:
                    raise engine.ResourceExceeded(
                        f"abstract game exceeds {max_states} states"
                    )
                states.append(st)
                index[st.key()] = j
                frontier.append(j)
            return j

        if state.player == 1:
            edges1[i] = [
                (sigma, intern(target)) for sigma, target in ab.player1_moves(state)
            ]
        else:
            edges2[i] = [intern(target) for target in ab.player2_moves(state)]
    return AbstractGame(ab, states, edges1, edges2, frozenset(unsafe))


# ---------------------------------------------------------------------------
# Spec-level convenience wrappers


def cube(pset: PredicateSet, bits: Bits) -> Formula:
    return conj(*(p.formula(bits[i]) for i, p in enumerate(pset)))


def obs_equiv(a: Bits, b: Bits, pset: PredicateSet, m: SystemModel) -> bool:
    return Abstraction(m, pset).obs_equiv(a, b)


def initial_abstract_state(m: SystemModel, pset: PredicateSet) -> AbstractState:
    return Abstraction(m, pset).initial_state()


def pre1(m: SystemModel, sigma: str, f: Formula) -> Formula:
    return Abstraction(m, initial_predicates(m)).pre1(sigma, f)


def pre2(m: SystemModel, f: Formula) -> Formula:
    return Abstraction(m, initial_predicates(m)).pre2(f)
