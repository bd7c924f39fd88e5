"""Symbolic transition systems with sensor models and the induced two-player game.

A :class:`SystemModel` packages the variables, transition relation, initial and
error formulas, and per-input sensor formulas.  The system (player 1) moves on
states where the turn flag is true and picks the next output; the environment
(player 2) moves on the complementary states and updates the inputs.  Both move
relations are derived from the declared transition formula by conjoining the
turn literals and the frame conditions of the non-moving side.
"""

from __future__ import annotations

from collections.abc import Mapping as MappingABC
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from . import engine
from .formulas import (
    TRUE,
    Formula,
    FormulaError,
    Value,
    Variable,
    bool_var,
    conj,
    disj,
    enum_eq,
    evaluate,
    free_vars,
    is_primed,
    neg,
    prime,
    rename,
    substitute,
    to_sexpr,
    var_eq,
)


class ModelError(Exception):
    pass


class NoSuccessor(ModelError):
    pass


def _exact(val: Value) -> Value:
    if isinstance(val, bool) or isinstance(val, str):
        return val
    return Fraction(val)


class State(MappingABC):
    """Total assignment of the model's variables to exact values."""

    __slots__ = ("_values", "_hash")

    def __init__(self, values: Mapping[str, Value]):
        self._values = {name: _exact(val) for name, val in values.items()}
        self._hash = hash(frozenset(self._values.items()))

    def __getitem__(self, name: str) -> Value:
        return self._values[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, State):
            return self._values == other._values
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self._values.items()))
        return f"State({inner})"

    def updated(self, changes: Mapping[str, Value]) -> "State":
        merged = dict(self._values)
        merged.update(changes)
        return State(merged)


class Observation:
    """What the system sees of a state: the output and turn flag always, plus
    every input whose sensor formula holds there."""

    __slots__ = ("visible", "values", "_hash")

    def __init__(self, visible: Iterable[str], values: Mapping[str, Value]):
        self.visible = frozenset(visible)
        self.values = {name: _exact(val) for name, val in values.items()}
        if set(self.values) != self.visible:
            raise ModelError("observation values must cover exactly the visible set")
        self._hash = hash((self.visible, frozenset(self.values.items())))

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Observation):
            return self.visible == other.visible and self.values == other.values
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.values.items()))
        return f"Observation({inner})"


class SystemModel:
    """Symbolic game arena.

    ``variables`` must contain exactly one turn variable (boolean, named ``t``)
    and exactly one output variable with a finite enum sort.  ``sensors`` maps
    input variables to their observability formulas; inputs without an entry
    are globally observable.
    """

    def __init__(
        self,
        variables: Sequence[Variable],
        trans: Formula,
        init: Formula,
        error: Formula,
        sensors: Mapping[Variable, Formula] = (),
    ):
        self.variables: Tuple[Variable, ...] = tuple(variables)
        self.trans = trans
        self.init = init
        self.error = error

        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ModelError("duplicate variable names")
        for v in self.variables:
            if is_primed(v):
                raise ModelError(f"declared variable may not be primed: {v.name}")

        turns = [v for v in self.variables if v.kind == "turn"]
        if len(turns) != 1 or turns[0].sort != "bool" or turns[0].name != "t":
            raise ModelError("need exactly one boolean turn variable named t")
        self.turn = turns[0]

        outputs = [v for v in self.variables if v.kind == "output"]
        if len(outputs) != 1 or not isinstance(outputs[0].sort, tuple):
            raise ModelError("need exactly one enum-sorted output variable")
        self.output = outputs[0]
        self.alphabet: Tuple[str, ...] = self.output.sort

        self.inputs: Tuple[Variable, ...] = tuple(
            v for v in self.variables if v.kind == "input"
        )
        if len(self.inputs) + 2 != len(self.variables):
            raise ModelError("every variable must be an input, the output, or the turn")

        self.sensors: Dict[Variable, Formula] = {x: TRUE for x in self.inputs}
        for key, ox in dict(sensors).items():
            if key not in self.sensors:
                raise ModelError(f"sensor declared for non-input variable {key.name}")
            self.sensors[key] = ox

        self.primed_vars: Tuple[Variable, ...] = tuple(prime(v) for v in self.variables)
        self._by_name = {v.name: v for v in self.variables}

        turn_lit = bool_var(self.turn)
        turn_lit_next = bool_var(prime(self.turn))
        self.t1_formula = conj(
            trans,
            turn_lit,
            neg(turn_lit_next),
            *(var_eq(prime(x), x) for x in self.inputs),
        )
        self.t2_formula = conj(
            trans,
            neg(turn_lit),
            turn_lit_next,
            var_eq(prime(self.output), self.output),
        )

    def var(self, name: str) -> Variable:
        return self._by_name[name]

    def sensor(self, x: Variable) -> Formula:
        return self.sensors[x]

    def hidden_inputs(self) -> Tuple[Variable, ...]:
        """Inputs whose sensor formula is not the constant true."""
        return tuple(x for x in self.inputs if self.sensors[x] is not TRUE)

    def is_system_turn(self, v: State) -> bool:
        return bool(v[self.turn.name])

    def move_formula(self, v: State) -> Formula:
        return self.t1_formula if self.is_system_turn(v) else self.t2_formula

    def observe(self, v: State) -> Observation:
        visible = [self.turn.name, self.output.name]
        values = {
            self.turn.name: v[self.turn.name],
            self.output.name: v[self.output.name],
        }
        for x in self.inputs:
            if evaluate(self.sensors[x], v):
                visible.append(x.name)
                values[x.name] = v[x.name]
        return Observation(visible, values)

    def with_full_observation(self) -> "SystemModel":
        return SystemModel(self.variables, self.trans, self.init, self.error, {})


def observe(v: State, m: SystemModel) -> Observation:
    return m.observe(v)


def initial_state(m: SystemModel, seed: int = 0) -> State:
    model = engine.check_sat(m.init, seed=seed, model_vars=m.variables)
    if model is None:
        raise ModelError("initial formula is unsatisfiable")
    return State({v.name: model[v.name] for v in m.variables})


def sample_successor(
    v: State, m: SystemModel, constraint: Formula = TRUE, seed: int = 0
) -> State:
    """One concrete move from v, restricted by ``constraint`` over primed variables."""
    inst = substitute(m.move_formula(v), {x: v[x.name] for x in m.variables})
    model = engine.check_sat(conj(inst, constraint), seed=seed, model_vars=m.primed_vars)
    if model is None:
        raise NoSuccessor(
            f"no successor of {v!r} satisfying {to_sexpr(constraint)}"
        )
    return State({x.name: model[prime(x).name] for x in m.variables})


# ---------------------------------------------------------------------------
# Validation


class Violation:
    __slots__ = ("code", "message")

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message

    def __repr__(self) -> str:
        return f"{self.code}: {self.message}"


class ValidationReport:
    def __init__(self, violations: List[Violation]):
        self.violations = violations

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "model ok"
        return "\n".join(str(v) for v in self.violations)


def _scope_violations(
    label: str, f: Formula, allowed: Iterable[Variable], code: str
) -> List[Violation]:
    permitted = set(allowed)
    out = []
    for v in sorted(free_vars(f), key=lambda v: v.name):
        if v not in permitted:
            out.append(
                Violation(code, f"{label} mentions out-of-scope variable {v.name}")
            )
    return out


def _hat(v: Variable) -> Variable:
    return Variable(v.name + "@cmp", v.kind, v.sort)


def _observation_split_formula(m: SystemModel) -> Formula:
    """Satisfiable iff two init states produce different observations."""
    hatmap = {v: _hat(v) for v in m.variables}
    parts = [
        neg(var_eq(m.turn, hatmap[m.turn])),
        neg(var_eq(m.output, hatmap[m.output])),
    ]
    for x in m.inputs:
        ox = m.sensors[x]
        ox_hat = rename(ox, hatmap)
        parts.append(
            disj(
                conj(ox, neg(ox_hat)),
                conj(neg(ox), ox_hat),
                conj(ox, ox_hat, neg(var_eq(x, hatmap[x]))),
            )
        )
    return conj(m.init, rename(m.init, hatmap), disj(*parts))


def validate_model(m: SystemModel, check_nonblocking: bool = True) -> ValidationReport:
    """Semantic checks beyond the structural ones enforced at construction.

    Reports scope errors, underconstrained or contradictory initial formulas,
    blocking turn classes, and initial formulas spanning more than one
    observation class.  Never raises; collects every violation it can reach.
    """
    out: List[Violation] = []
    unprimed = list(m.variables)
    out += _scope_violations("init", m.init, unprimed, "InitScope")
    out += _scope_violations("error", m.error, unprimed, "ErrorScope")
    out += _scope_violations(
        "trans", m.trans, list(m.variables) + list(m.primed_vars), "TransScope"
    )
    for x in m.inputs:
        out += _scope_violations(
            f"sensor for {x.name}", m.sensors[x], m.inputs, "SensorScope"
        )
    if out:
        return ValidationReport(out)

    try:
        init_sat = engine.check_sat(m.init) is not None
    except engine.EngineError as exc:
        out.append(Violation("InitCheck", str(exc)))
        return ValidationReport(out)
    if not init_sat:
        out.append(Violation("InitEmpty", "initial formula is unsatisfiable"))
        return ValidationReport(out)

    turn_lit = bool_var(m.turn)
    if not (engine.entails(m.init, turn_lit) or engine.entails(m.init, neg(turn_lit))):
        out.append(
            Violation("InitTurnFree", "initial formula does not fix the turn flag")
        )
    if not any(engine.entails(m.init, enum_eq(m.output, s)) for s in m.alphabet):
        out.append(
            Violation("InitOutputFree", "initial formula does not fix the output")
        )

    if engine.check_sat(conj(m.init, m.error)) is not None:
        out.append(Violation("InitError", "an initial state satisfies the error formula"))

    if engine.check_sat(_observation_split_formula(m)) is not None:
        out.append(
            Violation(
                "InitObservationSplit",
                "initial states fall into more than one observation class",
            )
        )

    if check_nonblocking:
        primed = list(m.primed_vars)
        for label, side, guard in (
            ("system", m.t1_formula, turn_lit),
            ("environment", m.t2_formula, neg(turn_lit)),
        ):
            try:
                can_move = engine.eliminate_exists(primed, side)
            except engine.ResourceExceeded as exc:
                out.append(Violation("BlockingCheck", f"{label}: {exc}"))
                continue
            witness = engine.check_sat(conj(guard, neg(can_move)))
            if witness is not None:
                shown = {k: witness[k] for k in sorted(witness) if "'" not in k}
                out.append(
                    Violation(
                        "Blocking",
                        f"{label} turn can block, e.g. at {shown}",
                    )
                )
        for symbol in m.alphabet:
            try:
                can_pick = engine.eliminate_exists(
                    primed,
                    conj(m.t1_formula, enum_eq(prime(m.output), symbol)),
                )
            except engine.ResourceExceeded as exc:
                out.append(Violation("BlockingCheck", f"output {symbol}: {exc}"))
                continue
            if engine.check_sat(conj(turn_lit, neg(can_pick))) is not None:
                out.append(
                    Violation(
                        "SystemMoveRestricted",
                        f"output {symbol} is unavailable at some system state; "
                        "every output must be offered on every system turn",
                    )
                )
    return ValidationReport(out)
