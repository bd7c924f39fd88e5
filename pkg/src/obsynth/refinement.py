"""Counterexample-guided refinement of the knowledge-game abstraction.

A player-2 win in the abstract game is unrolled into a counterexample tree:
player-1 nodes branch on every admitted output symbol, player-2 nodes follow
the winning strategy's single move, leaves sit on unsafe or stuck states.  The
tree is checked for concrete realizability with per-trace satisfiability
queries.  Spurious trees refine the predicate set, either through precondition
chains (transition coarseness) or through interpolants over the shared
observable variable copies (observation coarseness).
"""

from __future__ import annotations

import time
from collections import deque
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from . import engine
from .abstraction import (
    Abstraction,
    AbstractGame,
    AbstractState,
    Bits,
    PredicateSet,
    bits_str,
    build_abstract_game,
    initial_predicates,
)
from .formulas import (
    FALSE,
    TRUE,
    Formula,
    Value,
    Variable,
    conj,
    disj,
    enum_eq,
    eval_with_atoms,
    free_vars,
    prime,
    rename,
    to_sexpr,
)
from .games import FiniteGame, PositionalStrategy, Winner, solve_safety
from .model import SystemModel, validate_model

Trace = Tuple[str, ...]


class RefinementError(Exception):
    pass


class TraceNotInNode(RefinementError):
    pass


class NoProgress(RefinementError):
    """Refinement produced no new predicate; the loop cannot continue."""


class ActNode:
    __slots__ = ("id", "state_index", "label", "parent", "sigma_in", "children")

    def __init__(
        self,
        node_id: int,
        state_index: int,
        label: AbstractState,
        parent: Optional["ActNode"],
        sigma_in: Optional[str],
    ):
        self.id = node_id
        self.state_index = state_index
        self.label = label
        self.parent = parent
        self.sigma_in = sigma_in
        self.children: List[Tuple[Optional[str], ActNode]] = []

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __repr__(self) -> str:
        return f"ActNode({self.id}:{self.label!r})"


class CounterexampleTree:
    """The unrolled player-2 strategy, with per-(node, trace) variable copies."""

    def __init__(self, game: AbstractGame, strategy: PositionalStrategy):
        if strategy.owner != 2:
            raise RefinementError("counterexample trees unroll player-2 strategies")
        self.game = game
        self.strategy = strategy
        self.abstraction: Abstraction = game.abstraction
        self.model: SystemModel = self.abstraction.model
        self.nodes: List[ActNode] = []
        self._traces: Dict[int, Tuple[Trace, ...]] = {}
        self._copies: Dict[Tuple[int, Trace], Dict[Variable, Variable]] = {}
        self._trace_f: Dict[Tuple[int, Trace], Formula] = {}
        self._node_f: Dict[Tuple[int, Trace], Formula] = {}
        self.unindex: Dict[Variable, Variable] = {}
        self.root = self._grow(game.initial, None, None)

    # -- construction ----------------------------------------------------

    def _grow(
        self, state_index: int, parent: Optional[ActNode], sigma_in: Optional[str]
    ) -> ActNode:
        node = ActNode(len(self.nodes), state_index, self.game.states[state_index], parent, sigma_in)
        self.nodes.append(node)
        ranks = self.strategy.ranks
        if state_index in self.game.unsafe:
            return node
        if node.label.player == 1:
            out = self.game.edges1.get(state_index, [])
            for sigma, j in out:
                if ranks and not ranks[j] < ranks[state_index]:
                    raise RefinementError("attractor rank failed to decrease")
                node.children.append((sigma, self._grow(j, node, sigma)))
        else:
            out2 = self.game.edges2.get(state_index, [])
            if out2:
                _, j = self.strategy.move(state_index)
                if ranks and not ranks[j] < ranks[state_index]:
                    raise RefinementError("attractor rank failed to decrease")
                node.children.append((None, self._grow(j, node, None)))
        return node

    # -- traces and variable copies ---------------------------------------

    def traces(self, node: ActNode) -> Tuple[Trace, ...]:
        got = self._traces.get(node.id)
        if got is not None:
            return got
        if node.is_leaf:
            got = ((),)
        elif node.label.player == 1:
            alphabet = self.model.alphabet
            acc: List[Trace] = []
            for sigma, child in node.children:
                acc.extend((sigma,) + w for w in self.traces(child))
            order = {s: i for i, s in enumerate(alphabet)}
            got = tuple(sorted(acc, key=lambda w: [order[s] for s in w]))
        else:
            got = self.traces(node.children[0][1])
        self._traces[node.id] = got
        return got

    def copies(self, node: ActNode, w: Trace) -> Dict[Variable, Variable]:
        key = (node.id, w)
        got = self._copies.get(key)
        if got is not None:
            return got
        visible = node.label.visible_inputs
        suffix = "-".join(w) if w else "e"
        mapping: Dict[Variable, Variable] = {}
        for v in self.model.variables:
            if v.kind != "input" or v.name in visible:
                name = f"{v.name}@{node.id}"
            else:
                name = f"{v.name}@{node.id}@{suffix}"
            cv = Variable(name, v.kind, v.sort)
            mapping[v] = cv
            self.unindex[cv] = v
        self._copies[key] = mapping
        return mapping

    # -- formulas ----------------------------------------------------------

    def _indexed_cube(self, node: ActNode, cps: Mapping[Variable, Variable]) -> Formula:
        return rename(self.abstraction.state_formula(node.label), cps)

    def trace_formula(self, node: ActNode, w: Trace) -> Formula:
        if w not in self.traces(node):
            raise TraceNotInNode(f"trace {w} not at node {node.id}")
        key = (node.id, w)
        got = self._trace_f.get(key)
        if got is not None:
            return got
        cps = self.copies(node, w)
        here = self._indexed_cube(node, cps)
        if node.is_leaf:
            # A knowledge state can mix error and non-error members when the
            # error condition tests hidden variables.  A genuine run must end
            # in an actual error member, not merely somewhere in the state.
            ab = self.abstraction
            bad = [
                ab.cube(s)
                for s in node.label.members
                if eval_with_atoms(self.model.error, ab.pset.atom_truth(s))
            ]
            got = rename(disj(*bad), cps) if bad else here
        elif node.label.player == 1:
            sigma, rest = w[0], w[1:]
            parts: List[Formula] = []
            for label, child in node.children:
                if label != sigma or rest not in self.traces(child):
                    continue
                ccp = self.copies(child, rest)
                step = {v: cps[v] for v in self.model.variables}
                step.update({prime(v): ccp[v] for v in self.model.variables})
                parts.append(
                    conj(
                        self.trace_formula(child, rest),
                        here,
                        self._indexed_cube(child, ccp),
                        enum_eq(ccp[self.model.output], sigma),
                        rename(self.model.t1_formula, step),
                    )
                )
            got = disj(*parts)
        else:
            _, child = node.children[0]
            ccp = self.copies(child, w)
            step = {v: cps[v] for v in self.model.variables}
            step.update({prime(v): ccp[v] for v in self.model.variables})
            got = conj(
                self.trace_formula(child, w),
                here,
                self._indexed_cube(child, ccp),
                rename(self.model.t2_formula, step),
            )
        self._trace_f[key] = got
        return got

    def rooted_trace_formula(self, w: Trace) -> Formula:
        """F(0,w) together with the initial condition on the root copies."""
        return conj(
            self.trace_formula(self.root, w),
            rename(self.model.init, self.copies(self.root, w)),
        )

    def tree_formula(self) -> Formula:
        return conj(*(self.rooted_trace_formula(w) for w in self.traces(self.root)))

    def node_formula(self, node: ActNode, w: Trace) -> Formula:
        if w not in self.traces(node):
            raise TraceNotInNode(f"trace {w} not at node {node.id}")
        key = (node.id, w)
        got = self._node_f.get(key)
        if got is not None:
            return got
        ab = self.abstraction
        if node.is_leaf:
            bad = []
            for s in node.label.members:
                if eval_with_atoms(self.model.error, ab.pset.atom_truth(s)):
                    bad.append(ab.cube(s))
            got = disj(*bad)
        elif node.label.player == 1:
            sigma, rest = w[0], w[1:]
            inner = disj(
                *(
                    self.node_formula(child, rest)
                    for label, child in node.children
                    if label == sigma and rest in self.traces(child)
                )
            )
            got = FALSE if inner is FALSE else conj(
                ab.state_formula(node.label), ab.pre1(sigma, inner)
            )
        else:
            _, child = node.children[0]
            inner = self.node_formula(child, w)
            got = FALSE if inner is FALSE else conj(
                ab.state_formula(node.label), ab.pre2(inner)
            )
        self._node_f[key] = got
        return got

    def dump(self) -> List[str]:
        lines = []
        for node in self.nodes:
            indent = 0
            p = node.parent
            while p is not None:
                indent += 1
                p = p.parent
            tag = "leaf" if node.is_leaf else ("P1" if node.label.player == 1 else "P2")
            via = f" via {node.sigma_in}" if node.sigma_in else ""
            lines.append(f"{'  ' * indent}{node.id}: {node.label!r} [{tag}]{via}")
        return lines


def build_act(game: AbstractGame, strategy: PositionalStrategy) -> CounterexampleTree:
    return CounterexampleTree(game, strategy)


# ---------------------------------------------------------------------------
# Genuineness


class Genuine:
    def __init__(self, witness: Dict[str, Value]):
        self.witness = witness

    kind = "genuine"


class Spurious:
    def __init__(self, kind: str, pairs: List[Tuple[int, Trace]]):
        self.kind = kind  # "transition" or "observation"
        self.pairs = pairs

    def __repr__(self) -> str:
        return f"Spurious({self.kind}, {self.pairs})"


def check_genuine(act: CounterexampleTree):
    """Theorem-2 check: the tree formula is satisfiable iff some concrete
    observation-based environment realizes the counterexample.

    Diagnosis layers: trace formulas that are unsatisfiable on their own (or
    jointly with the initial condition at the root) witness transition-level
    coarseness; if every rooted trace is satisfiable but their conjunction is
    not, the coarseness is in the observation equivalence.
    """
    unsat: List[Tuple[int, Trace]] = []
    unsat_keys = set()
    for node in reversed(act.nodes):
        for w in act.traces(node):
            f = act.trace_formula(node, w)
            known = False
            if f is FALSE:
                known = True
            elif node.children:
                if node.label.player == 1 and w:
                    live = [
                        (c.id, w[1:])
                        for label, c in node.children
                        if label == w[0] and w[1:] in act.traces(c)
                    ]
                    known = bool(live) and all(p in unsat_keys for p in live)
                else:
                    known = (node.children[0][1].id, w) in unsat_keys
            if known or engine.check_sat(f) is None:
                unsat.append((node.id, w))
                unsat_keys.add((node.id, w))
    if unsat:
        return Spurious("transition", sorted(unsat))

    rooted_unsat: List[Tuple[int, Trace]] = []
    parts: List[Formula] = []
    for w in act.traces(act.root):
        g = act.rooted_trace_formula(w)
        parts.append(g)
        if engine.check_sat(g) is None:
            rooted_unsat.append((act.root.id, w))
    if rooted_unsat:
        return Spurious("transition", rooted_unsat)

    witness = engine.check_sat(conj(*parts))
    if witness is not None:
        return Genuine(witness)
    return Spurious("observation", [])


# ---------------------------------------------------------------------------
# Refinement operators


def refine_transitions(
    act: CounterexampleTree, pairs: Sequence[Tuple[int, Trace]], pset: PredicateSet
) -> PredicateSet:
    out = pset
    for node_id, w in pairs:
        out = out.extended_with_atoms_of(act.node_formula(act.nodes[node_id], w))
    if len(out) == len(pset):
        raise NoProgress("no new predicate from node formulas")
    return out


def refine_observation(act: CounterexampleTree, pset: PredicateSet) -> PredicateSet:
    """Interpolate between the longest satisfiable prefix of the rooted trace
    formulas (in trace order) and the first conflicting one."""
    traces = act.traces(act.root)
    acc: Optional[Formula] = None
    conflict: Optional[Formula] = None
    for w in traces:
        g = act.rooted_trace_formula(w)
        trial = g if acc is None else conj(acc, g)
        if engine.check_sat(trial) is None:
            if acc is None:
                raise RefinementError("first rooted trace is already unsatisfiable")
            conflict = g
            break
        acc = trial
    if conflict is None:
        raise RefinementError("rooted trace formulas are jointly satisfiable")
    theta = engine.interpolate(acc, conflict)
    out = pset.extended_with_atoms_of(rename(theta, act.unindex))
    if len(out) == len(pset):
        raise NoProgress("interpolant added no new predicate")
    return out


# ---------------------------------------------------------------------------
# The refinement loop


class Budget:
    def __init__(
        self,
        max_iterations: int = 50,
        max_predicates: int = 200,
        timeout_secs: float = 600.0,
        max_states: int = 10 ** 6,
    ):
        self.max_iterations = max_iterations
        self.max_predicates = max_predicates
        self.timeout_secs = timeout_secs
        self.max_states = max_states


class IterationRecord:
    def __init__(
        self, iteration: int, num_predicates: int, num_states: int, verdict: str, millis: int
    ):
        self.iteration = iteration
        self.num_predicates = num_predicates
        self.num_states = num_states
        self.verdict = verdict
        self.millis = millis

    def line(self) -> str:
        return (
            f"iteration={self.iteration} predicates={self.num_predicates} "
            f"states={self.num_states} verdict={self.verdict} millis={self.millis}"
        )


class RefinementOutcome:
    def __init__(
        self,
        verdict: str,
        log: List[IterationRecord],
        predicates: PredicateSet,
        game: Optional[AbstractGame] = None,
        strategy: Optional[PositionalStrategy] = None,
        act: Optional[CounterexampleTree] = None,
        witness: Optional[Dict[str, Value]] = None,
        reason: str = "",
    ):
        self.verdict = verdict  # "realizable" | "unrealizable" | "inconclusive"
        self.log = log
        self.predicates = predicates
        self.game = game
        self.strategy = strategy
        self.act = act
        self.witness = witness
        self.reason = reason


def abstract_and_refine(
    m: SystemModel,
    initial: Optional[PredicateSet] = None,
    budget: Optional[Budget] = None,
) -> RefinementOutcome:
    budget = budget or Budget()
    pset = initial if initial is not None else initial_predicates(m)
    log: List[IterationRecord] = []
    started = time.monotonic()

    def record(it: int, states: int, verdict: str, t0: float) -> None:
        log.append(
            IterationRecord(it, len(pset), states, verdict, int((time.monotonic() - t0) * 1000))
        )

    for it in range(1, budget.max_iterations + 1):
        t0 = time.monotonic()
        if time.monotonic() - started > budget.timeout_secs:
            return RefinementOutcome(
                "inconclusive", log, pset, reason="wall-clock budget exhausted"
            )
        if len(pset) > budget.max_predicates:
            return RefinementOutcome(
                "inconclusive", log, pset, reason="predicate budget exhausted"
            )
        try:
            game = build_abstract_game(m, pset, budget.max_states)
        except engine.ResourceExceeded as exc:
            return RefinementOutcome("inconclusive", log, pset, reason=str(exc))
        fin = FiniteGame.from_abstract(game)
        win = solve_safety(fin)
        if win.player == 1:
            record(it, len(game), "realizable", t0)
            return RefinementOutcome(
                "realizable", log, pset, game=game, strategy=win.strategy
            )
        act = build_act(game, win.strategy)
        verdict = check_genuine(act)
        if isinstance(verdict, Genuine):
            record(it, len(game), "unrealizable", t0)
            return RefinementOutcome(
                "unrealizable", log, pset, game=game, act=act, witness=verdict.witness
            )
        try:
            if verdict.kind == "transition":
                pset = refine_transitions(act, verdict.pairs, pset)
                record(it, len(game), "refined-transitions", t0)
            else:
                pset = refine_observation(act, pset)
                record(it, len(game), "refined-observation", t0)
        except NoProgress as exc:
            record(it, len(game), "no-progress", t0)
            return RefinementOutcome("inconclusive", log, pset, reason=str(exc))
        except engine.ResourceExceeded as exc:
            record(it, len(game), "resource-exceeded", t0)
            return RefinementOutcome("inconclusive", log, pset, reason=str(exc))
    return RefinementOutcome(
        "inconclusive", log, pset, reason="iteration budget exhausted"
    )


# ---------------------------------------------------------------------------
# Sensor reconfiguration


class ReconfigureReport:
    def __init__(
        self,
        verdict: str,
        original: RefinementOutcome,
        full: Optional[RefinementOutcome],
        modalities: List[str],
        precision: List[str],
    ):
        self.verdict = verdict
        # "already-realizable" | "reconfigurable" | "infeasible" | "inconclusive"
        self.original = original
        self.full = full
        self.modalities = modalities
        self.precision = precision

    def lines(self) -> List[str]:
        out = [f"verdict: {self.verdict}"]
        if self.verdict == "reconfigurable":
            out.append("predicates over currently unobservable variables (new sensing modalities):")
            out.extend(f"  {p}" for p in self.modalities)
            out.append("predicates over observable variables (precision requirements):")
            out.extend(f"  {p}" for p in self.precision)
        return out


def sensor_reconfigure(
    m: SystemModel, budget: Optional[Budget] = None
) -> ReconfigureReport:
    """Algorithm: rerun synthesis with every sensor forced on; a realizable
    rerun yields the predicates whose observation would suffice, an
    unrealizable one shows the task is impossible regardless of sensing."""
    first = abstract_and_refine(m, None, budget)
    if first.verdict == "realizable":
        return ReconfigureReport("already-realizable", first, None, [], [])
    full_model = m.with_full_observation()
    second = abstract_and_refine(full_model, None, budget)
    if second.verdict == "unrealizable":
        return ReconfigureReport("infeasible", first, second, [], [])
    if second.verdict == "inconclusive":
        return ReconfigureReport("inconclusive", first, second, [], [])
    hidden = set()
    for x in m.inputs:
        if not engine.is_valid(m.sensors[x]):
            hidden.add(x.name)
    modalities: List[str] = []
    precision: List[str] = []
    for p in second.predicates:
        names = {v.name for v in p.variables()}
        if not names & {x.name for x in m.inputs}:
            continue  # output and turn bookkeeping predicates
        if names & hidden:
            modalities.append(str(p))
        else:
            precision.append(str(p))
    return ReconfigureReport("reconfigurable", first, second, modalities, precision)
