"""Quantifier-free formulas over exact rationals, booleans, and finite enums.

Atoms are kept in a canonical normal form (sorted coprime integer
coefficients, leading coefficient positive, only <= < = as relations) so
that semantically identical constraints such as ``2x <= 4`` and ``x <= 2``
collapse to the same object.  Orientations like ``x >= 4`` become negative
literals over the flipped atom (``not (x < 4)``).

Everything here is immutable; hashes are cached at construction so large
shared formula DAGs stay cheap to hash.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

RATIONAL = "real"
BOOLEAN = "bool"

Value = Union[Fraction, int, bool, str]
Sort = Union[str, tuple]


class FormulaError(Exception):
    pass


class NonlinearAtom(FormulaError):
    pass


class UnboundVariable(FormulaError):
    pass


class SortMismatch(FormulaError):
    pass


class AtomNotCovered(FormulaError):
    """Raised when a skeleton evaluation meets an atom outside the assignment."""


class Variable:
    """A sorted variable; ``sort`` is RATIONAL, BOOLEAN, or a tuple of enum symbols."""

    __slots__ = ("name", "kind", "sort", "_hash")

    def __init__(self, name: str, kind: str, sort: Sort):
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "sort", sort)
        object.__setattr__(self, "_hash", hash(("var", name, kind, sort)))

    def __setattr__(self, *a):
        raise AttributeError("Variable is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return (
            self is other
            or (
                isinstance(other, Variable)
                and self.name == other.name
                and self.kind == other.kind
                and self.sort == other.sort
            )
        )

    def __repr__(self) -> str:
        return f"Variable({self.name!r})"


def prime(v: Variable) -> Variable:
    return Variable(v.name + "'", v.kind, v.sort)


def is_primed(v: Variable) -> bool:
    return v.name.endswith("'")


def unprime(v: Variable) -> Variable:
    if not is_primed(v):
        raise FormulaError(f"not a primed variable: {v.name}")
    return Variable(v.name[:-1], v.kind, v.sort)


# ---------------------------------------------------------------------------
# atoms


class Atom:
    __slots__ = ("_hash",)

    def __hash__(self) -> int:
        return self._hash


class LinearAtom(Atom):
    """sum(coeff_i * var_i) rel bound with integer coprime coefficients.

    Invariants: coeffs sorted by variable name, no zero coefficient, leading
    coefficient positive, rel in {"<=", "<", "="}, bound an int scaled
    together with the coefficients.
    """

    __slots__ = ("coeffs", "rel", "bound")

    def __init__(self, coeffs: tuple, rel: str, bound: int):
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "rel", rel)
        object.__setattr__(self, "bound", bound)
        object.__setattr__(self, "_hash", hash(("lin", coeffs, rel, bound)))

    def __setattr__(self, *a):
        raise AttributeError("LinearAtom is immutable")

    __hash__ = Atom.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (
            isinstance(other, LinearAtom)
            and self._hash == other._hash
            and self.rel == other.rel
            and self.bound == other.bound
            and self.coeffs == other.coeffs
        )

    def variables(self) -> tuple:
        return tuple(v for v, _ in self.coeffs)

    def __repr__(self) -> str:
        return atom_to_str(self)


class BoolAtom(Atom):
    __slots__ = ("var",)

    def __init__(self, var: Variable):
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "_hash", hash(("bool", var)))

    def __setattr__(self, *a):
        raise AttributeError("BoolAtom is immutable")

    __hash__ = Atom.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, BoolAtom) and self.var == other.var)

    def variables(self) -> tuple:
        return (self.var,)

    def __repr__(self) -> str:
        return atom_to_str(self)


class EnumAtom(Atom):
    """var = symbol for an enum-sorted variable."""

    __slots__ = ("var", "symbol")

    def __init__(self, var: Variable, symbol: str):
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "symbol", symbol)
        object.__setattr__(self, "_hash", hash(("enum", var, symbol)))

    def __setattr__(self, *a):
        raise AttributeError("EnumAtom is immutable")

    __hash__ = Atom.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (
            isinstance(other, EnumAtom) and self.var == other.var and self.symbol == other.symbol
        )

    def variables(self) -> tuple:
        return (self.var,)

    def __repr__(self) -> str:
        return atom_to_str(self)


# ---------------------------------------------------------------------------
# formulas


class Formula:
    __slots__ = ("_hash", "_fv")

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return to_sexpr(self)


class Const(Formula):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "_fv", frozenset())
        object.__setattr__(self, "_hash", hash(("const", value)))

    __hash__ = Formula.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Const) and self.value == other.value)


TRUE = Const(True)
FALSE = Const(False)


class Lit(Formula):
    __slots__ = ("atom", "positive")

    def __init__(self, atom: Atom, positive: bool = True):
        object.__setattr__(self, "atom", atom)
        object.__setattr__(self, "positive", positive)
        object.__setattr__(self, "_fv", None)
        object.__setattr__(self, "_hash", hash(("lit", atom, positive)))

    __hash__ = Formula.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (
            isinstance(other, Lit)
            and self.positive == other.positive
            and self.atom == other.atom
        )


class And(Formula):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_fv", None)
        object.__setattr__(self, "_hash", hash(("and",) + tuple(map(hash, args))) )

    __hash__ = Formula.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (
            isinstance(other, And) and self._hash == other._hash and self.args == other.args
        )


class Or(Formula):
    __slots__ = ("args",)

    def __init__(self, args: tuple):
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_fv", None)
        object.__setattr__(self, "_hash", hash(("or",) + tuple(map(hash, args))))

    __hash__ = Formula.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (
            isinstance(other, Or) and self._hash == other._hash and self.args == other.args
        )


class Not(Formula):
    __slots__ = ("arg",)

    def __init__(self, arg: Formula):
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_fv", None)
        object.__setattr__(self, "_hash", hash(("not", hash(arg))))

    __hash__ = Formula.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (isinstance(other, Not) and self.arg == other.arg)


# smart constructors -------------------------------------------------------


def conj(*parts: Formula) -> Formula:
    out: dict[Formula, None] = {}
    for p in _flatten(parts, And):
        if p is TRUE or p == TRUE:
            continue
        if p is FALSE or p == FALSE:
            return FALSE
        out.setdefault(p)
    if not out:
        return TRUE
    args = tuple(out)
    return args[0] if len(args) == 1 else And(args)


def disj(*parts: Formula) -> Formula:
    out: dict[Formula, None] = {}
    for p in _flatten(parts, Or):
        if p is FALSE or p == FALSE:
            continue
        if p is TRUE or p == TRUE:
            return TRUE
        out.setdefault(p)
    if not out:
        return FALSE
    args = tuple(out)
    return args[0] if len(args) == 1 else Or(args)


def _flatten(parts: Iterable, node_type) -> Iterator[Formula]:
    for p in parts:
        if isinstance(p, (list, tuple)):
            yield from _flatten(p, node_type)
        elif isinstance(p, node_type):
            yield from p.args
        else:
            yield p


def neg(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Lit):
        return Lit(f.atom, not f.positive)
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    return disj(neg(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return conj(disj(neg(a), b), disj(neg(b), a))


# atom constructors --------------------------------------------------------


def _norm_linear(terms: dict, rel: str, bound: Fraction):
    """Canonicalize; returns (LinearAtom, positive) or a bool constant."""
    items = sorted(((v, c) for v, c in terms.items() if c != 0), key=lambda it: it[0].name)
    if not items:
        if rel == "<=":
            return bound >= 0
        if rel == "<":
            return bound > 0
        return bound == 0
    denom = lcm(*(c.denominator for _, c in items), bound.denominator)
    ints = [(v, int(c * denom)) for v, c in items]
    ibound = int(bound * denom)
    g = 0
    for _, c in ints:
        g = gcd(g, abs(c))
    g = gcd(g, abs(ibound))
    if g > 1:
        ints = [(v, c // g) for v, c in ints]
        ibound //= g
    positive = True
    if ints[0][1] < 0:
        ints = [(v, -c) for v, c in ints]
        ibound = -ibound
        if rel == "<=":
            rel, positive = "<", False
        elif rel == "<":
            rel, positive = "<=", False
    return LinearAtom(tuple(ints), rel, ibound), positive


def linear_atom(terms: Mapping[Variable, Union[Fraction, int]], rel: str, bound) -> Formula:
    """Build a normalized linear literal; >=, > orientations flip to negated <, <=."""
    for v in terms:
        if v.sort != RATIONAL:
            raise SortMismatch(f"{v.name} is not rational")
    frac_terms = {v: Fraction(c) for v, c in terms.items()}
    fbound = Fraction(bound)
    if rel == ">=":
        return neg(linear_atom(frac_terms, "<", fbound))
    if rel == ">":
        return neg(linear_atom(frac_terms, "<=", fbound))
    if rel not in ("<=", "<", "="):
        raise FormulaError(f"unknown relation {rel!r}")
    res = _norm_linear(frac_terms, rel, fbound)
    if isinstance(res, bool):
        return TRUE if res else FALSE
    atom, positive = res
    return Lit(atom, positive)


def enum_eq(var: Variable, symbol: str) -> Formula:
    if not isinstance(var.sort, tuple):
        raise SortMismatch(f"{var.name} is not enum-sorted")
    if symbol not in var.sort:
        raise SortMismatch(f"{symbol!r} is not a symbol of {var.name}")
    return Lit(EnumAtom(var, symbol))


def bool_var(var: Variable) -> Formula:
    if var.sort != BOOLEAN:
        raise SortMismatch(f"{var.name} is not boolean")
    return Lit(BoolAtom(var))


def var_eq(a: Variable, b: Variable) -> Formula:
    """a = b for same-sorted variables; enum/bool equality expands finitely."""
    if a.sort != b.sort:
        raise SortMismatch(f"{a.name} and {b.name} differ in sort")
    if a.sort == RATIONAL:
        return linear_atom({a: 1, b: -1}, "=", 0)
    if a.sort == BOOLEAN:
        return iff(bool_var(a), bool_var(b))
    return disj(*(conj(enum_eq(a, s), enum_eq(b, s)) for s in a.sort))


def normalize_atom(a: Atom):
    """Return the canonical (atom, positive-polarity) pair; idempotent on atoms."""
    if isinstance(a, LinearAtom):
        res = _norm_linear({v: Fraction(c) for v, c in a.coeffs}, a.rel, Fraction(a.bound))
        if isinstance(res, bool):
            raise FormulaError("degenerate linear atom")
        return res
    return a, True


# ---------------------------------------------------------------------------
# traversal and semantics


def free_vars(f: Formula) -> frozenset:
    fv = f._fv
    if fv is not None:
        return fv
    if isinstance(f, Lit):
        fv = frozenset(f.atom.variables())
    elif isinstance(f, Not):
        fv = free_vars(f.arg)
    else:
        fv = frozenset().union(*(free_vars(a) for a in f.args))
    object.__setattr__(f, "_fv", fv)
    return fv


def atoms_of(f: Formula) -> list:
    """All atoms, first-occurrence order."""
    seen: dict[Atom, None] = {}
    stack = [f]
    visited: set[int] = set()
    while stack:
        g = stack.pop()
        if id(g) in visited:
            continue
        visited.add(id(g))
        if isinstance(g, Lit):
            seen.setdefault(g.atom)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, (And, Or)):
            stack.extend(reversed(g.args))
    return list(seen)


def literals_in(f: Formula) -> list:
    """(atom, polarity) pairs as they occur in NNF, first occurrence wins."""
    out: dict[tuple, None] = {}

    def walk(g: Formula, pos: bool):
        if isinstance(g, Lit):
            out.setdefault((g.atom, g.positive == pos))
        elif isinstance(g, Not):
            walk(g.arg, not pos)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a, pos)

    walk(f, True)
    return list(out)


def atom_sort_key(a: Atom) -> str:
    if isinstance(a, BoolAtom):
        return "0:" + a.var.name
    if isinstance(a, EnumAtom):
        return f"1:{a.var.name}={a.symbol}"
    return "2:" + atom_to_str(a)


def preds(f: Formula) -> tuple:
    """The atoms of f in a deterministic (lexicographic) order."""
    return tuple(sorted(atoms_of(f), key=atom_sort_key))


def evaluate(f: Formula, assignment: Mapping[str, Value]) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not evaluate(f.arg, assignment)
    if isinstance(f, And):
        return all(evaluate(a, assignment) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, assignment) for a in f.args)
    return eval_atom(f.atom, assignment) == f.positive


def eval_with_atoms(f: Formula, truth: Mapping[Atom, bool]) -> bool:
    """Evaluate the Boolean skeleton of f under an atom-level truth assignment."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Not):
        return not eval_with_atoms(f.arg, truth)
    if isinstance(f, And):
        return all(eval_with_atoms(a, truth) for a in f.args)
    if isinstance(f, Or):
        return any(eval_with_atoms(a, truth) for a in f.args)
    try:
        val = truth[f.atom]
    except KeyError:
        raise AtomNotCovered(atom_to_str(f.atom)) from None
    return val == f.positive


def eval_atom(a: Atom, assignment: Mapping[str, Value]) -> bool:
    if isinstance(a, LinearAtom):
        total = Fraction(0)
        for v, c in a.coeffs:
            total += c * _rational_value(v, assignment)
        if a.rel == "<=":
            return total <= a.bound
        if a.rel == "<":
            return total < a.bound
        return total == a.bound
    if isinstance(a, BoolAtom):
        val = _lookup(a.var, assignment)
        if not isinstance(val, bool):
            raise SortMismatch(f"{a.var.name} bound to non-boolean {val!r}")
        return val
    val = _lookup(a.var, assignment)
    return val == a.symbol


def _lookup(v: Variable, assignment: Mapping[str, Value]) -> Value:
    try:
        return assignment[v.name]
    except KeyError:
        raise UnboundVariable(v.name) from None


def _rational_value(v: Variable, assignment: Mapping[str, Value]) -> Fraction:
    val = _lookup(v, assignment)
    if isinstance(val, bool) or not isinstance(val, (int, Fraction)):
        raise SortMismatch(f"{v.name} bound to non-rational {val!r}")
    return Fraction(val)


Substitution = Mapping[Variable, Union[Variable, Value]]


def substitute(f: Formula, mapping: Substitution) -> Formula:
    """Simultaneous substitution of variables by variables or constants."""
    memo: dict[int, Formula] = {}

    def walk(g: Formula) -> Formula:
        hit = memo.get(id(g))
        if hit is not None:
            return hit
        if isinstance(g, Const):
            r = g
        elif isinstance(g, Lit):
            r = _subst_lit(g, mapping)
        elif isinstance(g, Not):
            r = neg(walk(g.arg))
        elif isinstance(g, And):
            r = conj(*(walk(a) for a in g.args))
        else:
            r = disj(*(walk(a) for a in g.args))
        memo[id(g)] = r
        return r

    return walk(f)


def _subst_lit(g: Lit, mapping: Substitution) -> Formula:
    a = g.atom
    if isinstance(a, LinearAtom):
        terms: dict[Variable, Fraction] = {}
        bound = Fraction(a.bound)
        for v, c in a.coeffs:
            tgt = mapping.get(v, v)
            if isinstance(tgt, Variable):
                if tgt.sort != RATIONAL:
                    raise SortMismatch(f"cannot map {v.name} to non-rational {tgt.name}")
                terms[tgt] = terms.get(tgt, Fraction(0)) + c
            elif isinstance(tgt, bool) or isinstance(tgt, str):
                raise SortMismatch(f"cannot bind rational {v.name} to {tgt!r}")
            else:
                bound -= c * Fraction(tgt)
        pos_formula = linear_atom(terms, a.rel, bound)
        return pos_formula if g.positive else neg(pos_formula)
    if isinstance(a, BoolAtom):
        tgt = mapping.get(a.var, a.var)
        if isinstance(tgt, Variable):
            pos_formula = bool_var(tgt)
        elif isinstance(tgt, bool):
            pos_formula = TRUE if tgt else FALSE
        else:
            raise SortMismatch(f"cannot bind boolean {a.var.name} to {tgt!r}")
        return pos_formula if g.positive else neg(pos_formula)
    tgt = mapping.get(a.var, a.var)
    if isinstance(tgt, Variable):
        pos_formula = enum_eq(tgt, a.symbol)
    elif isinstance(tgt, str):
        pos_formula = TRUE if tgt == a.symbol else FALSE
    else:
        raise SortMismatch(f"cannot bind enum {a.var.name} to {tgt!r}")
    return pos_formula if g.positive else neg(pos_formula)


def rename(f: Formula, mapping: Mapping[Variable, Variable]) -> Formula:
    return substitute(f, mapping)


def to_nnf(f: Formula) -> Formula:
    """Negation normal form; Not survives only where folded into literals."""
    memo: dict[tuple, Formula] = {}

    def walk(g: Formula, pos: bool) -> Formula:
        key = (id(g), pos)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if isinstance(g, Const):
            r = g if pos else neg(g)
        elif isinstance(g, Lit):
            r = g if pos else neg(g)
        elif isinstance(g, Not):
            r = walk(g.arg, not pos)
        elif isinstance(g, And):
            parts = tuple(walk(a, pos) for a in g.args)
            r = conj(*parts) if pos else disj(*parts)
        else:
            parts = tuple(walk(a, pos) for a in g.args)
            r = disj(*parts) if pos else conj(*parts)
        memo[key] = r
        return r

    return walk(f, True)


# ---------------------------------------------------------------------------
# printing


def _frac_str(x: Union[int, Fraction]) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def _form_str(coeffs: tuple) -> str:
    parts = []
    for v, c in coeffs:
        if c == 1:
            parts.append(v.name)
        elif c == -1:
            parts.append("-" + v.name)
        else:
            parts.append(f"{c}{v.name}")
    return "+".join(parts).replace("+-", "-")


def atom_to_str(a: Atom) -> str:
    if isinstance(a, LinearAtom):
        return f"{_form_str(a.coeffs)}{a.rel}{a.bound}"
    if isinstance(a, BoolAtom):
        return a.var.name
    return f"{a.var.name}={a.symbol}"


def _term_sexpr(coeffs: tuple, bound: int) -> tuple:
    terms = []
    for v, c in coeffs:
        terms.append(v.name if c == 1 else f"(* {c} {v.name})")
    lhs = terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"
    return lhs, str(bound)


def atom_sexpr(a: Atom, positive: bool = True) -> str:
    if isinstance(a, LinearAtom):
        lhs, rhs = _term_sexpr(a.coeffs, a.bound)
        rel = {"<=": "<=", "<": "<", "=": "="}[a.rel]
        s = f"({rel} {lhs} {rhs})"
    elif isinstance(a, BoolAtom):
        s = a.var.name
    else:
        s = f"(= {a.var.name} {a.symbol})"
    return s if positive else f"(not {s})"


def to_sexpr(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Lit):
        return atom_sexpr(f.atom, f.positive)
    if isinstance(f, Not):
        return f"(not {to_sexpr(f.arg)})"
    op = "and" if isinstance(f, And) else "or"
    return "(" + op + " " + " ".join(to_sexpr(a) for a in f.args) + ")"
