"""S-expression model files.

Grammar::

    (system
      (input (x real) (p bool) (r (a b c)) ...)
      (output (u (sigma1 sigma2 ...)) ...)
      (init FORMULA)
      (trans FORMULA)
      (sensors (x FORMULA) ...)        ; omitted inputs are always observable
      (error FORMULA))

Formulas use the heads and/or/not/implies/iff, the relations <= < >= > =, and
linear expressions built from +, -, * and / (division by constants only).
Primed variables are written x'.  Numbers may be integers, decimals (1.5), or
fractions (3/2); all arithmetic is exact.  Comments run from ; to end of line.

The turn variable t is implicit.  Declaring several outputs (or boolean ones)
builds one combined enum output named u whose symbols join the component
values with underscores; component names remain usable in formulas and are
rewritten to tests on u.  An output symbol declared as (idle auto) also adds
an environment row that leaves every input unchanged while u=idle.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .formulas import (
    BOOLEAN,
    FALSE,
    RATIONAL,
    TRUE,
    Formula,
    FormulaError,
    Variable,
    bool_var,
    conj,
    disj,
    enum_eq,
    free_vars,
    iff,
    implies,
    linear_atom,
    neg,
    prime,
    var_eq,
)
from .model import ModelError, SystemModel


class SpecError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class Token:
    __slots__ = ("text", "line", "col")

    def __init__(self, text: str, line: int, col: int):
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self) -> str:
        return f"Token({self.text!r}@{self.line}:{self.col})"


Node = Union[Token, List["Node"]]


def _tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
        elif c in " \t\r":
            col += 1
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            out.append(Token(c, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            out.append(Token(text[i:j], line, col))
            col += j - i
            i = j
    return out


def parse_sexpr(text: str) -> List[Node]:
    """Top-level forms of the document."""
    tokens = _tokenize(text)
    pos = 0

    def form() -> Node:
        nonlocal pos
        if pos >= len(tokens):
            raise SpecError("unexpected end of input", *_last_span(tokens))
        tok = tokens[pos]
        pos += 1
        if tok.text == "(":
            items: List[Node] = []
            while True:
                if pos >= len(tokens):
                    raise SpecError("missing )", tok.line, tok.col)
                if tokens[pos].text == ")":
                    pos += 1
                    return items
                items.append(form())
        if tok.text == ")":
            raise SpecError("unexpected )", tok.line, tok.col)
        return tok

    forms: List[Node] = []
    while pos < len(tokens):
        forms.append(form())
    if not forms:
        raise SpecError("empty input", 1, 1)
    return forms


def _last_span(tokens: Sequence[Token]) -> Tuple[int, int]:
    if tokens:
        return tokens[-1].line, tokens[-1].col
    return 1, 1


def _span(node: Node) -> Tuple[int, int]:
    while isinstance(node, list):
        if not node:
            return 1, 1
        node = node[0]
    return node.line, node.col


def print_sexpr(node: Node) -> str:
    if isinstance(node, Token):
        return node.text
    return "(" + " ".join(print_sexpr(x) for x in node) + ")"


class SpecDocument:
    """Parsed document; printing and reparsing yields an identical tree."""

    def __init__(self, forms: List[Node]):
        self.forms = forms

    @classmethod
    def parse(cls, text: str) -> "SpecDocument":
        return cls(parse_sexpr(text))

    def print(self) -> str:
        return "\n".join(print_sexpr(f) for f in self.forms) + "\n"

    def tree(self):
        def strip(node: Node):
            if isinstance(node, Token):
                return node.text
            return [strip(x) for x in node]

        return [strip(f) for f in self.forms]


def _head(node: Node) -> Optional[str]:
    if isinstance(node, list) and node and isinstance(node[0], Token):
        return node[0].text
    return None


def _symbol(node: Node, what: str) -> Token:
    if not isinstance(node, Token):
        raise SpecError(f"expected {what}", *_span(node))
    return node


_NUMBER_CHARS = set("0123456789./-")


def _try_number(text: str) -> Optional[Fraction]:
    if not text or text in {"-", "/", "."} or (set(text) - _NUMBER_CHARS):
        return None
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        return None


class _Env:
    """Name resolution while building formulas."""

    def __init__(
        self,
        variables: Mapping[str, Variable],
        components: Mapping[str, "_Component"],
    ):
        self.variables = dict(variables)
        self.components = dict(components)

    def resolve(self, name: str) -> Tuple[Optional[Variable], bool]:
        """(variable, primed) for declared names, handling the ' suffix."""
        primed = name.endswith("'")
        base = name[:-1] if primed else name
        v = self.variables.get(base)
        if v is None:
            return None, primed
        return (prime(v) if primed else v), primed

    def component(self, name: str) -> Optional[Tuple["_Component", bool]]:
        primed = name.endswith("'")
        base = name[:-1] if primed else name
        c = self.components.get(base)
        if c is None:
            return None
        return c, primed


class _Component:
    """One declared output, mapped onto the combined enum output."""

    def __init__(self, name: str, values: Tuple[str, ...], output: Variable):
        self.name = name
        self.values = values
        self.output = output
        self.by_value: Dict[str, List[str]] = {v: [] for v in values}

    def formula(self, value: str, primed: bool) -> Formula:
        var = prime(self.output) if primed else self.output
        return disj(*(enum_eq(var, s) for s in self.by_value[value]))


def _parse_linear(node: Node, env: _Env) -> Tuple[Dict[Variable, Fraction], Fraction]:
    """Linear expression as (coefficients, constant)."""
    if isinstance(node, Token):
        num = _try_number(node.text)
        if num is not None:
            return {}, num
        v, _ = env.resolve(node.text)
        if v is None:
            raise SpecError(f"unknown variable {node.text}", node.line, node.col)
        if v.sort != RATIONAL:
            raise SpecError(
                f"{node.text} is not numeric", node.line, node.col
            )
        return {v: Fraction(1)}, Fraction(0)
    head = _head(node)
    args = node[1:] if isinstance(node, list) else []
    if head == "+":
        coeffs: Dict[Variable, Fraction] = {}
        const = Fraction(0)
        for a in args:
            c, k = _parse_linear(a, env)
            const += k
            for v, q in c.items():
                coeffs[v] = coeffs.get(v, Fraction(0)) + q
        return coeffs, const
    if head == "-":
        if not args:
            raise SpecError("- needs arguments", *_span(node))
        coeffs, const = _parse_linear(args[0], env)
        if len(args) == 1:
            return {v: -q for v, q in coeffs.items()}, -const
        for a in args[1:]:
            c, k = _parse_linear(a, env)
            const -= k
            for v, q in c.items():
                coeffs[v] = coeffs.get(v, Fraction(0)) - q
        return coeffs, const
    if head == "*":
        coeffs = {}
        const = Fraction(1)
        pending: List[Tuple[Dict[Variable, Fraction], Fraction]] = []
        for a in args:
            pending.append(_parse_linear(a, env))
        scalar = Fraction(1)
        linear_part: Optional[Tuple[Dict[Variable, Fraction], Fraction]] = None
        for c, k in pending:
            if c:
                if linear_part is not None:
                    raise SpecError("nonlinear product", *_span(node))
                linear_part = (c, k)
            else:
                scalar *= k
        if linear_part is None:
            return {}, scalar
        c, k = linear_part
        return {v: q * scalar for v, q in c.items()}, k * scalar
    if head == "/":
        if len(args) != 2:
            raise SpecError("/ needs two arguments", *_span(node))
        c, k = _parse_linear(args[0], env)
        dc, dk = _parse_linear(args[1], env)
        if dc or dk == 0:
            raise SpecError("division only by nonzero constants", *_span(node))
        return {v: q / dk for v, q in c.items()}, k / dk
    raise SpecError("expected a linear expression", *_span(node))


def _enum_side(node: Node, env: _Env):
    """Classify one side of an equality: enum variable, component, or symbol."""
    if not isinstance(node, Token):
        return None
    comp = env.component(node.text)
    if comp is not None:
        return ("component",) + comp
    v, primed = env.resolve(node.text)
    if v is not None and isinstance(v.sort, tuple):
        return ("var", v, primed)
    if v is None and _try_number(node.text) is None:
        return ("symbol", node.text)
    return None


def _bool_side(node: Node, env: _Env) -> bool:
    if isinstance(node, list):
        return _head(node) in {"and", "or", "not", "implies", "iff", "=", "<=", "<", ">=", ">"}
    if node.text in {"true", "false"}:
        return True
    comp = env.component(node.text)
    if comp is not None and comp[0].values == ("false", "true"):
        return True
    v, _ = env.resolve(node.text)
    return v is not None and v.sort == BOOLEAN


def _side_values(side) -> Tuple[str, ...]:
    if side[0] == "component":
        return side[1].values
    return side[1].sort


def _side_eq_value(side, value: str) -> Formula:
    if side[0] == "component":
        return side[1].formula(value, side[2])
    return enum_eq(side[1], value)


def _parse_equality(node: Node, env: _Env) -> Formula:
    lhs, rhs = node[1], node[2]
    ls = _enum_side(lhs, env)
    rs = _enum_side(rhs, env)
    l_enum = ls is not None and ls[0] != "symbol"
    r_enum = rs is not None and rs[0] != "symbol"
    if l_enum or r_enum:
        if not l_enum:
            lhs, rhs, ls, rs = rhs, lhs, rs, ls
            l_enum, r_enum = r_enum, l_enum
        if r_enum:
            if ls[0] == "var" and rs[0] == "var":
                return var_eq(ls[1], rs[1])
            shared = [v for v in _side_values(ls) if v in _side_values(rs)]
            return disj(
                *(conj(_side_eq_value(ls, v), _side_eq_value(rs, v)) for v in shared)
            )
        other = _symbol(rhs, "enum symbol")
        if other.text not in _side_values(ls):
            owner = ls[1].name
            raise SpecError(
                f"{other.text} is not a value of {owner}", other.line, other.col
            )
        return _side_eq_value(ls, other.text)
    if _bool_side(lhs, env) or _bool_side(rhs, env):
        return iff(_parse_formula(lhs, env), _parse_formula(rhs, env))
    lc, lk = _parse_linear(lhs, env)
    rc, rk = _parse_linear(rhs, env)
    terms = dict(lc)
    for v, q in rc.items():
        terms[v] = terms.get(v, Fraction(0)) - q
    return linear_atom(terms, "=", rk - lk)


def _parse_relation(node: Node, env: _Env, rel: str) -> Formula:
    if len(node) != 3:
        raise SpecError(f"{rel} needs two arguments", *_span(node))
    lc, lk = _parse_linear(node[1], env)
    rc, rk = _parse_linear(node[2], env)
    terms = dict(lc)
    for v, q in rc.items():
        terms[v] = terms.get(v, Fraction(0)) - q
    return linear_atom(terms, rel, rk - lk)


def _parse_formula(node: Node, env: _Env) -> Formula:
    if isinstance(node, Token):
        if node.text == "true":
            return TRUE
        if node.text == "false":
            return FALSE
        comp = env.component(node.text)
        if comp is not None:
            c, primed = comp
            if c.values == ("false", "true"):
                return c.formula("true", primed)
            raise SpecError(
                f"{c.name} is not boolean", node.line, node.col
            )
        v, _ = env.resolve(node.text)
        if v is None:
            raise SpecError(f"unknown variable {node.text}", node.line, node.col)
        if v.sort != BOOLEAN:
            raise SpecError(f"{node.text} is not boolean", node.line, node.col)
        return bool_var(v)
    head = _head(node)
    args = node[1:]
    if head == "and":
        return conj(*(_parse_formula(a, env) for a in args))
    if head == "or":
        return disj(*(_parse_formula(a, env) for a in args))
    if head == "not":
        if len(args) != 1:
            raise SpecError("not needs one argument", *_span(node))
        return neg(_parse_formula(args[0], env))
    if head == "implies":
        if len(args) != 2:
            raise SpecError("implies needs two arguments", *_span(node))
        return implies(_parse_formula(args[0], env), _parse_formula(args[1], env))
    if head == "iff":
        if len(args) != 2:
            raise SpecError("iff needs two arguments", *_span(node))
        return iff(_parse_formula(args[0], env), _parse_formula(args[1], env))
    if head == "=":
        if len(args) != 2:
            raise SpecError("= needs two arguments", *_span(node))
        return _parse_equality(node, env)
    if head in {"<=", "<", ">=", ">"}:
        return _parse_relation(node, env, head)
    raise SpecError(f"unknown formula head {head!r}", *_span(node))


def parse_formula_text(text: str, m: SystemModel) -> Formula:
    """Formula in the model's vocabulary; used to reload strategy files."""
    forms = parse_sexpr(text)
    if len(forms) != 1:
        raise SpecError("expected one formula")
    env = _Env({v.name: v for v in m.variables}, {})
    try:
        return _parse_formula(forms[0], env)
    except FormulaError as exc:
        raise SpecError(str(exc)) from exc


_SORTS = {"real": RATIONAL, "rational": RATIONAL, "bool": BOOLEAN}


def _parse_inputs(section: List[Node]) -> List[Variable]:
    out = []
    for entry in section[1:]:
        if not isinstance(entry, list) or len(entry) != 2:
            raise SpecError("input entries look like (name sort)", *_span(entry))
        name = _symbol(entry[0], "input name")
        sort_node = entry[1]
        if isinstance(sort_node, Token):
            sort = _SORTS.get(sort_node.text)
            if sort is None:
                raise SpecError(
                    f"unknown sort {sort_node.text}", sort_node.line, sort_node.col
                )
        else:
            syms = tuple(_symbol(s, "enum symbol").text for s in sort_node)
            if len(set(syms)) != len(syms) or not syms:
                raise SpecError("enum symbols must be distinct", *_span(sort_node))
            sort = syms
        out.append(Variable(name.text, "input", sort))
    return out


class _OutputSpec:
    def __init__(self, name: str, values: Tuple[str, ...], idle_auto: Optional[str]):
        self.name = name
        self.values = values
        self.idle_auto = idle_auto


def _parse_outputs(section: List[Node]) -> List[_OutputSpec]:
    out = []
    for entry in section[1:]:
        if not isinstance(entry, list) or len(entry) != 2:
            raise SpecError("output entries look like (name sort)", *_span(entry))
        name = _symbol(entry[0], "output name")
        sort_node = entry[1]
        if isinstance(sort_node, Token):
            if sort_node.text != "bool":
                raise SpecError(
                    "outputs are bool or enum", sort_node.line, sort_node.col
                )
            out.append(_OutputSpec(name.text, ("false", "true"), None))
            continue
        values: List[str] = []
        idle_auto = None
        for s in sort_node:
            if isinstance(s, list):
                if (
                    len(s) == 2
                    and isinstance(s[0], Token)
                    and isinstance(s[1], Token)
                    and s[1].text == "auto"
                ):
                    idle_auto = s[0].text
                    values.append(s[0].text)
                    continue
                raise SpecError("bad output symbol", *_span(s))
            values.append(s.text)
        if len(set(values)) != len(values) or not values:
            raise SpecError("output symbols must be distinct", *_span(sort_node))
        out.append(_OutputSpec(name.text, tuple(values), idle_auto))
    return out


def build_model(doc: SpecDocument, notes: Optional[List[str]] = None) -> SystemModel:
    notes = notes if notes is not None else []
    if len(doc.forms) != 1 or _head(doc.forms[0]) != "system":
        raise SpecError("expected a single (system ...) form", *_span(doc.forms[0]))
    sections: Dict[str, List[Node]] = {}
    for part in doc.forms[0][1:]:
        head = _head(part)
        if head not in {"input", "output", "init", "trans", "sensors", "error"}:
            raise SpecError(f"unknown section {head!r}", *_span(part))
        if head in sections:
            raise SpecError(f"duplicate section {head}", *_span(part))
        sections[head] = part
    for required in ("input", "output", "init", "trans", "error"):
        if required not in sections:
            raise SpecError(f"missing section ({required} ...)", *_span(doc.forms[0]))

    inputs = _parse_inputs(sections["input"])
    outputs = _parse_outputs(sections["output"])
    names = [v.name for v in inputs] + [o.name for o in outputs]
    if len(set(names)) != len(names):
        raise SpecError("duplicate variable name", *_span(sections["input"]))

    if len(outputs) == 1 and outputs[0].values != ("false", "true"):
        u = Variable(outputs[0].name, "output", outputs[0].values)
        components = {
            outputs[0].name: _Component(outputs[0].name, outputs[0].values, u)
        }
        for s in outputs[0].values:
            components[outputs[0].name].by_value[s].append(s)
    else:
        if "u" in names:
            raise SpecError(
                "combined outputs reserve the name u", *_span(sections["output"])
            )
        symbols = []
        assigns = list(itertools.product(*(o.values for o in outputs)))
        for combo in assigns:
            symbols.append("_".join(combo))
        u = Variable("u", "output", tuple(symbols))
        components = {}
        for k, o in enumerate(outputs):
            comp = _Component(o.name, o.values, u)
            for combo, sym in zip(assigns, symbols):
                comp.by_value[combo[k]].append(sym)
            components[o.name] = comp
        notes.append(f"combined {len(outputs)} outputs into u over {len(symbols)} symbols")

    turn = Variable("t", "turn", BOOLEAN)
    variables = list(inputs) + [u, turn]
    env = _Env({v.name: v for v in variables}, components)

    def formula_of(section_name: str) -> Formula:
        section = sections[section_name]
        if len(section) != 2:
            raise SpecError(
                f"({section_name} ...) takes one formula", *_span(section)
            )
        try:
            return _parse_formula(section[1], env)
        except FormulaError as exc:
            raise SpecError(str(exc), *_span(section[1])) from exc

    init = formula_of("init")
    trans = formula_of("trans")
    error = formula_of("error")

    sensors: Dict[Variable, Formula] = {}
    if "sensors" in sections:
        input_by_name = {v.name: v for v in inputs}
        sensor_env = _Env({v.name: v for v in inputs}, {})
        for entry in sections["sensors"][1:]:
            if not isinstance(entry, list) or len(entry) != 2:
                raise SpecError("sensor entries look like (x FORMULA)", *_span(entry))
            name = _symbol(entry[0], "input name")
            x = input_by_name.get(name.text)
            if x is None:
                raise SpecError(
                    f"sensor for undeclared input {name.text}", name.line, name.col
                )
            if x in sensors:
                raise SpecError(f"duplicate sensor for {name.text}", name.line, name.col)
            try:
                sensors[x] = _parse_formula(entry[1], sensor_env)
            except FormulaError as exc:
                raise SpecError(str(exc), *_span(entry[1])) from exc

    idle_rows = []
    for o in outputs:
        if o.idle_auto:
            idle = components[o.name].formula(o.idle_auto, primed=False)
            idle_rows.append(
                conj(
                    neg(bool_var(turn)),
                    bool_var(prime(turn)),
                    idle,
                    *(var_eq(prime(x), x) for x in inputs),
                )
            )
            notes.append(f"added idle environment row for {o.name}={o.idle_auto}")
    if idle_rows:
        trans = disj(trans, *idle_rows)

    mentioned = {v.name for v in free_vars(init)}
    if turn.name not in mentioned:
        init = conj(init, bool_var(turn))
        notes.append("init does not mention t; assuming t=1 (system moves first)")
    if u.name not in mentioned and not any(o.name in mentioned for o in outputs):
        default = "idle" if "idle" in u.sort else u.sort[0]
        init = conj(init, enum_eq(u, default))
        notes.append(f"init does not mention the output; assuming u={default}")

    try:
        return SystemModel(variables, trans, init, error, sensors)
    except ModelError as exc:
        raise SpecError(str(exc)) from exc


def parse_model(text: str, notes: Optional[List[str]] = None) -> SystemModel:
    return build_model(SpecDocument.parse(text), notes)
