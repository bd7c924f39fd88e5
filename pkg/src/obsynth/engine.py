"""Decision procedures for the formula language: satisfiability with model
generation, validity, existential quantifier elimination, interpolation, and
simplification.

Satisfiability is a DPLL search over the Boolean skeleton with lazy theory
checks on complete conjunctions of literals.  Rational reasoning is exact
(Fraction arithmetic): Gaussian substitution for equalities and
Fourier-Motzkin projection for inequalities.  Quantifier elimination works
clause-wise on a DNF whose size is capped; interpolants are the strongest
ones, obtained by projecting the left formula onto the shared variables.
"""
from __future__ import annotations

import random
import sys
from collections import deque
from fractions import Fraction
from math import gcd
from typing import Iterable, Mapping, Optional, Sequence

from .formulas import (
    BOOLEAN,
    RATIONAL,
    TRUE,
    FALSE,
    And,
    Atom,
    BoolAtom,
    Const,
    EnumAtom,
    Formula,
    LinearAtom,
    Lit,
    Not,
    Or,
    Value,
    Variable,
    atom_sort_key,
    atoms_of,
    conj,
    disj,
    evaluate,
    free_vars,
    iff,
    linear_atom,
    neg,
    to_nnf,
    to_sexpr,
)

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))


class EngineError(Exception):
    pass


class NotUnsat(EngineError):
    """interpolate() was called on a jointly satisfiable pair."""


class ResourceExceeded(EngineError):
    pass


class InterpolationError(EngineError):
    pass


#: every interpolate() call verifies its result; counters kept for audits
INTERPOLATION_STATS = {"calls": 0, "verified": 0}

DEFAULT_CLAUSE_CAP = 4096


# ---------------------------------------------------------------------------
# linear conjunctions: feasibility, model generation, projection
#
# A constraint is (coeffs: dict[Variable, Fraction], rel, bound: Fraction)
# with rel one of "<=", "<", "=".


def _constraint_of_literal(atom: LinearAtom, positive: bool):
    coeffs = {v: Fraction(c) for v, c in atom.coeffs}
    bound = Fraction(atom.bound)
    if positive:
        return (coeffs, atom.rel, bound)
    if atom.rel == "<=":  # not (t <= b)  <=>  -t < -b
        return ({v: -c for v, c in coeffs.items()}, "<", -bound)
    if atom.rel == "<":  # not (t < b)  <=>  -t <= -b
        return ({v: -c for v, c in coeffs.items()}, "<=", -bound)
    raise EngineError("negated equality must be split before constraint extraction")


def _neq_branches(atom: LinearAtom):
    coeffs = {v: Fraction(c) for v, c in atom.coeffs}
    bound = Fraction(atom.bound)
    lt = (coeffs, "<", bound)
    gt = ({v: -c for v, c in coeffs.items()}, "<", -bound)
    return lt, gt


def _const_ok(rel: str, bound: Fraction) -> bool:
    if rel == "<=":
        return bound >= 0
    if rel == "<":
        return bound > 0
    return bound == 0


def _row_key(coeffs, rel, bound):
    """Canonical integer form of a row; integer keys hash far faster than
    Fractions, which matters because elimination dedupes after every step."""
    scale = bound.denominator if isinstance(bound, Fraction) else 1
    for c in coeffs.values():
        d = c.denominator if isinstance(c, Fraction) else 1
        scale = scale // gcd(scale, d) * d
    ints = sorted((v.name, int(c * scale)) for v, c in coeffs.items())
    b = int(bound * scale)
    g = abs(b)
    for _, c in ints:
        g = gcd(g, c)
    if g > 1:
        ints = [(n, c // g) for n, c in ints]
        b //= g
    return (tuple(ints), rel, b)


def _dedupe(constraints) -> Optional[list]:
    """Drop duplicates and trivially true rows; None on a false constant row."""
    seen = set()
    out = []
    for coeffs, rel, bound in constraints:
        coeffs = {v: c for v, c in coeffs.items() if c != 0}
        if not coeffs:
            if not _const_ok(rel, bound):
                return None
            continue
        key = _row_key(coeffs, rel, bound)
        if key in seen:
            continue
        seen.add(key)
        out.append((coeffs, rel, bound))
    return out


def _substitute_eq(constraints, var, ecoeffs, econst):
    out = []
    for coeffs, rel, bound in constraints:
        a = coeffs.get(var)
        if not a:
            out.append((coeffs, rel, bound))
            continue
        new = {v: c for v, c in coeffs.items() if v != var}
        for v, c in ecoeffs.items():
            new[v] = new.get(v, Fraction(0)) + a * c
        out.append((new, rel, bound - a * econst))
    return out


def _split_bounds(constraints, var):
    lowers, uppers, rest = [], [], []
    for coeffs, rel, bound in constraints:
        a = coeffs.get(var, Fraction(0))
        if a == 0:
            rest.append((coeffs, rel, bound))
            continue
        expr = {v: -c / a for v, c in coeffs.items() if v != var}
        const = bound / a
        strict = rel == "<"
        if a > 0:
            uppers.append((expr, const, strict))
        else:
            lowers.append((expr, const, strict))
    return lowers, uppers, rest


def _fm_combine(lowers, uppers):
    out = []
    for lo_expr, lo_const, lo_strict in lowers:
        for up_expr, up_const, up_strict in uppers:
            coeffs = dict(lo_expr)
            for v, c in up_expr.items():
                coeffs[v] = coeffs.get(v, Fraction(0)) - c
            rel = "<" if lo_strict or up_strict else "<="
            out.append((coeffs, rel, up_const - lo_const))
    return out


def _pick_elim_var(constraints, candidates):
    in_equalities = sorted(
        {v for coeffs, rel, _ in constraints if rel == "=" for v in coeffs if v in candidates},
        key=lambda v: v.name,
    )
    if in_equalities:
        return in_equalities[0]
    counts: dict[Variable, list] = {}
    for coeffs, _, _ in constraints:
        for v, a in coeffs.items():
            if v in candidates:
                lohi = counts.setdefault(v, [0, 0])
                lohi[0 if a < 0 else 1] += 1
    best, best_cost = None, None
    for v in sorted(counts, key=lambda v: v.name):
        lo, hi = counts[v]
        if best_cost is None or lo * hi < best_cost:
            best, best_cost = v, lo * hi
    return best


def _eliminate_linear(constraints, elim_vars, record_steps: bool):
    """Project out elim_vars; returns (remaining, steps) or None if infeasible."""
    constraints = _dedupe(constraints)
    if constraints is None:
        return None
    elim = set(elim_vars)
    steps = []
    while True:
        present = {v for coeffs, _, _ in constraints for v in coeffs}
        todo = elim & present
        if not todo:
            return constraints, steps
        var = _pick_elim_var(constraints, todo)
        equalities = [c for c in constraints if c[1] == "=" and var in c[0]]
        if equalities:
            coeffs, _, bound = equalities[0]
            a = coeffs[var]
            ecoeffs = {v: -c / a for v, c in coeffs.items() if v != var}
            econst = bound / a
            rest = [c for c in constraints if c is not equalities[0]]
            substituted = _substitute_eq(rest, var, ecoeffs, econst)
            if record_steps:
                steps.append(("eq", var, ecoeffs, econst))
            # Substitution never grows the row count, so skip the full dedupe
            # and only sift out the constant rows it can create.
            constraints = []
            for coeffs, rel, bnd in substituted:
                live = {v: c for v, c in coeffs.items() if c != 0}
                if not live:
                    if not _const_ok(rel, bnd):
                        return None
                    continue
                constraints.append((live, rel, bnd))
        else:
            lowers, uppers, rest = _split_bounds(constraints, var)
            constraints = rest + _fm_combine(lowers, uppers)
            if record_steps:
                steps.append(("fm", var, lowers, uppers))
            constraints = _dedupe(constraints)
            if constraints is None:
                return None


def _eval_expr(expr, const, values) -> Fraction:
    total = Fraction(const)
    for v, c in expr.items():
        total += c * values[v]
    return total


def solve_linear(constraints, rng: Optional[random.Random] = None) -> Optional[dict]:
    """Model of a conjunction of linear constraints, or None if infeasible.

    Values are interval points (midpoints, or rng-chosen interior points when an
    rng is supplied), bound +/- 1 on half-open feasible rays, and 0 for
    unconstrained variables.
    """
    all_vars = {v for coeffs, _, _ in constraints for v in coeffs}
    res = _eliminate_linear(constraints, all_vars, True)
    if res is None:
        return None
    _, steps = res
    stepped = {s[1] for s in steps}
    values: dict[Variable, Fraction] = {v: Fraction(0) for v in all_vars - stepped}
    for step in reversed(steps):
        if step[0] == "eq":
            _, var, ecoeffs, econst = step
            values[var] = _eval_expr(ecoeffs, econst, values)
            continue
        _, var, lowers, uppers = step
        lo = hi = None
        lo_strict = hi_strict = False
        for expr, const, strict in lowers:
            val = _eval_expr(expr, const, values)
            if lo is None or val > lo or (val == lo and strict):
                lo, lo_strict = val, strict
        for expr, const, strict in uppers:
            val = _eval_expr(expr, const, values)
            if hi is None or val < hi or (val == hi and strict):
                hi, hi_strict = val, strict
        if lo is None and hi is None:
            values[var] = Fraction(0)
        elif lo is None:
            values[var] = hi - 1
        elif hi is None:
            values[var] = lo + 1
        elif rng is None or lo == hi:
            values[var] = (lo + hi) / 2
        else:
            values[var] = lo + (hi - lo) * Fraction(rng.randint(1, 9), 10)
    return values


# ---------------------------------------------------------------------------
# theory consistency of literal conjunctions


def _theory_model(literals, rng: random.Random) -> Optional[dict]:
    """Model (keyed by variable name) of a conjunction of literals, or None."""
    bools: dict[str, bool] = {}
    enum_pos: dict[Variable, str] = {}
    enum_neg: dict[Variable, set] = {}
    constraints = []
    neqs = []
    for atom, positive in literals:
        if isinstance(atom, BoolAtom):
            prev = bools.get(atom.var.name)
            if prev is not None and prev != positive:
                return None
            bools[atom.var.name] = positive
        elif isinstance(atom, EnumAtom):
            if positive:
                prev = enum_pos.get(atom.var)
                if prev is not None and prev != atom.symbol:
                    return None
                enum_pos[atom.var] = atom.symbol
            else:
                enum_neg.setdefault(atom.var, set()).add(atom.symbol)
        elif isinstance(atom, LinearAtom):
            if not positive and atom.rel == "=":
                neqs.append(atom)
            else:
                constraints.append(_constraint_of_literal(atom, positive))
        else:
            raise EngineError(f"unknown atom {atom!r}")
    enums: dict[str, str] = {}
    for var, sym in enum_pos.items():
        if sym in enum_neg.get(var, ()):
            return None
        enums[var.name] = sym
    for var, banned in enum_neg.items():
        if var in enum_pos:
            continue
        allowed = [s for s in var.sort if s not in banned]
        if not allowed:
            return None
        enums[var.name] = rng.choice(allowed)

    def attempt(i: int, cons) -> Optional[dict]:
        if i == len(neqs):
            return solve_linear(cons, rng)
        lt, gt = _neq_branches(neqs[i])
        order = (lt, gt) if rng.random() < 0.5 else (gt, lt)
        for branch in order:
            sol = attempt(i + 1, cons + [branch])
            if sol is not None:
                return sol
        return None

    sol = attempt(0, constraints)
    if sol is None:
        return None
    model: dict[str, Value] = dict(bools)
    model.update(enums)
    for v, val in sol.items():
        model[v.name] = val
    return model


# ---------------------------------------------------------------------------
# DPLL satisfiability


def _condition(f: Formula, assign: Mapping[Atom, bool]) -> Formula:
    memo: dict[int, Formula] = {}

    def walk(g: Formula) -> Formula:
        hit = memo.get(id(g))
        if hit is not None:
            return hit
        if isinstance(g, Const):
            r = g
        elif isinstance(g, Lit):
            val = assign.get(g.atom)
            r = g if val is None else (TRUE if val == g.positive else FALSE)
        elif isinstance(g, Not):
            r = neg(walk(g.arg))
        elif isinstance(g, And):
            r = conj(*(walk(a) for a in g.args))
        else:
            r = disj(*(walk(a) for a in g.args))
        memo[id(g)] = r
        return r

    return walk(f)


_CONFLICT = object()


def _unit_literals(f: Formula):
    """Literals forced at the top level of an NNF formula."""
    if isinstance(f, Lit):
        return {f.atom: f.positive}
    if not isinstance(f, And):
        return {}
    out: dict[Atom, bool] = {}
    for a in f.args:
        if isinstance(a, Lit):
            prev = out.get(a.atom)
            if prev is not None and prev != a.positive:
                return _CONFLICT
            out[a.atom] = a.positive
    return out


def _partial_consistent(assign: Mapping[Atom, bool]) -> bool:
    """Cheap incomplete theory check of a partial assignment.  Catches enum
    clashes, difference-equality cycles, and interval conflicts, skipping rows
    it cannot reduce; complete checking still happens on full assignments.
    Must never report False for a consistent set.  Pruning branches early
    keeps conjunctions of near-identical subproblems (trace formulas share
    long equality chains) from exploding."""
    rows = []
    enum_pos: dict = {}
    enum_neg: dict = {}
    for atom, positive in assign.items():
        if isinstance(atom, LinearAtom):
            if positive or atom.rel != "=":
                rows.append(_constraint_of_literal(atom, positive))
        elif isinstance(atom, EnumAtom):
            if positive:
                prev = enum_pos.get(atom.var)
                if prev is not None and prev != atom.symbol:
                    return False
                enum_pos[atom.var] = atom.symbol
            else:
                enum_neg.setdefault(atom.var, set()).add(atom.symbol)
    for var, sym in enum_pos.items():
        if sym in enum_neg.get(var, ()):
            return False
    for var, banned in enum_neg.items():
        if var not in enum_pos and all(s in banned for s in var.sort):
            return False
    if not rows:
        return True

    # Difference-constraint graph.  An edge u -> v with weight (c, k) encodes
    # value(v) - value(u) <= c - k*epsilon (k counts strict edges); node None
    # is the zero reference for single-variable bounds.  The assignment is
    # inconsistent exactly when some cycle has negative weight, with a strict
    # zero cycle counting as negative; SPFA relaxation counting finds both.
    graph: dict = {}

    def edge(u, v, c, strict):
        graph.setdefault(u, []).append((v, c, 1 if strict else 0))
        graph.setdefault(v, [])

    for coeffs, rel, bound in rows:
        strict = rel == "<"
        if len(coeffs) == 1:
            ((x, a),) = coeffs.items()
            c = Fraction(bound) / a
            if rel == "=":
                edge(None, x, c, False)
                edge(x, None, -c, False)
            elif a > 0:
                edge(None, x, c, strict)
            else:
                edge(x, None, -c, strict)
        elif len(coeffs) == 2:
            (xa, a), (xb, b) = coeffs.items()
            if a != -b:
                continue
            c = Fraction(bound) / a
            if a < 0:
                xa, xb, c = xb, xa, -c
                # now xa - xb <= c (or = c)
            if rel == "=":
                edge(xb, xa, c, False)
                edge(xa, xb, -c, False)
            else:
                edge(xb, xa, c, strict)

    if not graph:
        return True
    zero = Fraction(0)
    dist = {u: (zero, 0) for u in graph}
    pending = deque(graph)
    queued = set(graph)
    limit = len(graph)
    # Count queue entries, not relaxations: parallel edges can lower a node's
    # distance several times in one pass without any cycle being involved.
    enqueued = dict.fromkeys(graph, 0)
    while pending:
        u = pending.popleft()
        queued.discard(u)
        du, ku = dist[u]
        for v, c, k in graph[u]:
            cand = (du + c, ku + k)
            dv = dist[v]
            if cand[0] < dv[0] or (cand[0] == dv[0] and cand[1] > dv[1]):
                dist[v] = cand
                if v not in queued:
                    count = enqueued[v] + 1
                    if count > limit:
                        return False
                    enqueued[v] = count
                    queued.add(v)
                    pending.append(v)
    return True


def _dpll(f: Formula, assign: dict, rng: random.Random, fresh: int = 0):
    while True:
        if isinstance(f, Const):
            break
        units = _unit_literals(f)
        if units is _CONFLICT:
            return None
        if not units:
            break
        for atom in units:
            if not isinstance(atom, BoolAtom):
                fresh += 1
        assign.update(units)
        f = _condition(f, units)
    if f == FALSE:
        return None
    if f == TRUE:
        return _theory_model(list(assign.items()), rng)
    if fresh and not _partial_consistent(assign):
        return None
    # Branching in formula order keeps the search local: conflicts inside one
    # conjunct are resolved before the next conjunct's atoms are touched.
    atom = atoms_of(f)[0]
    first = rng.random() < 0.5
    for val in (first, not first):
        branch = dict(assign)
        branch[atom] = val
        res = _dpll(
            _condition(f, {atom: val}),
            branch,
            rng,
            0 if isinstance(atom, BoolAtom) else 1,
        )
        if res is not None:
            return res
    return None


_DEFAULTS = {RATIONAL: Fraction(0), BOOLEAN: False}


def _default_value(v: Variable) -> Value:
    if isinstance(v.sort, tuple):
        return v.sort[0]
    return _DEFAULTS[v.sort]


def check_sat(
    f: Formula, seed: int = 0, model_vars: Iterable[Variable] = ()
) -> Optional[dict]:
    """Model of f (total over free(f) and model_vars), or None if unsatisfiable."""
    rng = random.Random(seed)
    theory = _dpll(to_nnf(f), {}, rng)
    if theory is None:
        return None
    model: dict[str, Value] = {}
    for v in sorted(free_vars(f) | set(model_vars), key=lambda v: v.name):
        model[v.name] = theory.get(v.name, _default_value(v))
    if not evaluate(f, model):
        raise EngineError(f"internal: witness fails its own formula: {to_sexpr(f)}")
    return model


def is_valid(f: Formula) -> bool:
    return check_sat(neg(f)) is None


def entails(f: Formula, g: Formula) -> bool:
    return check_sat(conj(f, neg(g))) is None


def equivalent(f: Formula, g: Formula) -> bool:
    return is_valid(iff(f, g))


# ---------------------------------------------------------------------------
# DNF and quantifier elimination


def _merge_clause(base: dict, extra: dict) -> Optional[dict]:
    merged = dict(base)
    for atom, pos in extra.items():
        prev = merged.get(atom)
        if prev is None:
            merged[atom] = pos
        elif prev != pos:
            return None
    return merged


def _literal_clauses(atom: Atom, positive: bool) -> list:
    if isinstance(atom, LinearAtom) and not positive and atom.rel == "=":
        out = []
        for coeffs, rel, bound in _neq_branches(atom):
            lit = linear_atom(coeffs, rel, bound)
            assert isinstance(lit, Lit)
            out.append({lit.atom: lit.positive})
        return out
    return [{atom: positive}]


def dnf(f: Formula, max_clauses: int = DEFAULT_CLAUSE_CAP) -> list:
    """Clauses (atom -> polarity dicts) of f; negated equalities are split."""

    def go(g: Formula) -> list:
        if isinstance(g, Const):
            return [{}] if g.value else []
        if isinstance(g, Lit):
            return _literal_clauses(g.atom, g.positive)
        if isinstance(g, Or):
            out = []
            seen = set()
            for a in g.args:
                for cl in go(a):
                    key = frozenset(cl.items())
                    if key not in seen:
                        seen.add(key)
                        out.append(cl)
                if len(out) > max_clauses:
                    raise ResourceExceeded(f"DNF exceeds {max_clauses} clauses")
            return out
        if isinstance(g, And):
            clauses = [{}]
            for a in g.args:
                part = go(a)
                nxt = []
                seen = set()
                for c1 in clauses:
                    for c2 in part:
                        merged = _merge_clause(c1, c2)
                        if merged is None:
                            continue
                        key = frozenset(merged.items())
                        if key not in seen:
                            seen.add(key)
                            nxt.append(merged)
                    if len(nxt) > max_clauses:
                        raise ResourceExceeded(f"DNF exceeds {max_clauses} clauses")
                clauses = nxt
                if not clauses:
                    break
            return clauses
        raise EngineError("formula not in negation normal form")

    return go(to_nnf(f))


def clause_formula(clause: Mapping[Atom, bool]) -> Formula:
    return conj(*(Lit(a, p) for a, p in clause.items()))


def _eliminate_from_clause(clause: dict, elim: set) -> Optional[Formula]:
    """Project one DNF clause; None means the clause collapses to false."""
    keep: list[Formula] = []
    enum_pos: dict[Variable, set] = {}
    enum_neg: dict[Variable, set] = {}
    constraints = []
    for atom, pos in clause.items():
        if not (set(atom.variables()) & elim):
            keep.append(Lit(atom, pos))
            continue
        if isinstance(atom, BoolAtom):
            continue  # an eliminated boolean can always take the pinned value
        if isinstance(atom, EnumAtom):
            (enum_pos if pos else enum_neg).setdefault(atom.var, set()).add(atom.symbol)
            continue
        constraints.append(_constraint_of_literal(atom, pos))
    for var, syms in enum_pos.items():
        if len(syms) > 1 or (syms & enum_neg.get(var, set())):
            return None
    for var, banned in enum_neg.items():
        if var not in enum_pos and not [s for s in var.sort if s not in banned]:
            return None
    res = _eliminate_linear(constraints, {v for v in elim if v.sort == RATIONAL}, False)
    if res is None:
        return None
    remaining, _ = res
    for coeffs, rel, bound in remaining:
        lit = linear_atom(coeffs, rel, bound)
        if lit == FALSE:
            return None
        if lit != TRUE:
            keep.append(lit)
    return conj(*keep)


def _support_groups(args: Sequence[Formula], elim: set):
    """Partition conjuncts into components connected through eliminated variables."""
    parent = list(range(len(args)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[Variable, int] = {}
    unrelated = []
    for i, a in enumerate(args):
        touched = free_vars(a) & elim
        if not touched:
            unrelated.append(a)
            continue
        for v in touched:
            j = owner.get(v)
            if j is None:
                owner[v] = i
            else:
                parent[find(i)] = find(j)
    groups: dict[int, list] = {}
    for i, a in enumerate(args):
        if free_vars(a) & elim:
            groups.setdefault(find(i), []).append(a)
    return unrelated, list(groups.values())


def eliminate_exists(
    variables: Iterable[Variable], f: Formula, max_clauses: int = DEFAULT_CLAUSE_CAP
) -> Formula:
    """Quantifier-free formula equivalent to (exists variables. f)."""
    elim = set(variables) & free_vars(f)
    if not elim:
        return f
    f = to_nnf(f)
    if isinstance(f, Or):
        return simplify(disj(*(eliminate_exists(elim, a, max_clauses) for a in f.args)))
    if isinstance(f, And):
        # existentials distribute over variable-disjoint groups of conjuncts
        unrelated, groups = _support_groups(f.args, elim)
        if len(groups) > 1 or (unrelated and groups):
            parts = list(unrelated)
            for group in groups:
                gvars = elim & frozenset().union(*(free_vars(a) for a in group))
                parts.append(eliminate_exists(gvars, conj(*group), max_clauses))
            return simplify(conj(*parts))
    out = []
    for clause in dnf(f, max_clauses):
        g = _eliminate_from_clause(clause, elim)
        if g is not None:
            out.append(g)
    return simplify(disj(*out))


# ---------------------------------------------------------------------------
# interpolation


def interpolate(psi: Formula, phi: Formula) -> Formula:
    """Strongest interpolant: entailed by psi, conflicting with phi, and using
    only variables common to both."""
    if check_sat(conj(psi, phi)) is not None:
        raise NotUnsat("interpolation requires a jointly unsatisfiable pair")
    shared = free_vars(psi) & free_vars(phi)
    theta = simplify(eliminate_exists(free_vars(psi) - shared, psi))
    INTERPOLATION_STATS["calls"] += 1
    if not free_vars(theta) <= shared:
        raise InterpolationError("interpolant mentions non-shared variables")
    if check_sat(conj(psi, neg(theta))) is not None:
        raise InterpolationError("left formula does not entail interpolant")
    if check_sat(conj(theta, phi)) is not None:
        raise InterpolationError("interpolant fails to conflict with right formula")
    INTERPOLATION_STATS["verified"] += 1
    return theta


# ---------------------------------------------------------------------------
# simplification


def _lin_kind(atom: LinearAtom, pos: bool):
    b = Fraction(atom.bound)
    if atom.rel == "<=":
        return ("le", b) if pos else ("gt", b)
    if atom.rel == "<":
        return ("lt", b) if pos else ("ge", b)
    return ("eq", b) if pos else ("ne", b)


def _kind_holds_at(kind, point: Fraction) -> bool:
    k, b = kind
    if k == "le":
        return point <= b
    if k == "lt":
        return point < b
    if k == "ge":
        return point >= b
    if k == "gt":
        return point > b
    if k == "eq":
        return point == b
    return point != b


def _kind_implies(k1, k2) -> bool:
    a, b1 = k1
    c, b2 = k2
    if a == "eq":
        return _kind_holds_at(k2, b1)
    if a == "le":
        return (c == "le" and b1 <= b2) or (c == "lt" and b1 < b2) or (c == "ne" and b2 > b1)
    if a == "lt":
        return (c in ("le", "lt") and b1 <= b2) or (c == "ne" and b2 >= b1)
    if a == "ge":
        return (c == "ge" and b2 <= b1) or (c == "gt" and b2 < b1) or (c == "ne" and b2 < b1)
    if a == "gt":
        return (c in ("ge", "gt") and b2 <= b1) or (c == "ne" and b2 <= b1)
    return c == "ne" and b1 == b2


def _kinds_cover_line(k1, k2) -> bool:
    """Does (k1 or k2) hold at every rational point?"""
    a, b1 = k1
    c, b2 = k2
    if a == "ne" or c == "ne":
        if a == "ne" and c == "ne":
            return b1 != b2
        other, point = ((k2, b1) if a == "ne" else (k1, b2))
        return _kind_holds_at(other, point)
    upper = ("le", "lt")
    lower = ("ge", "gt")
    if a in upper and c in lower:
        (hk, hb), (lk, lb) = k1, k2
    elif a in lower and c in upper:
        (hk, hb), (lk, lb) = k2, k1
    else:
        return False
    if lb < hb:
        return True
    return lb == hb and (hk == "le" or lk == "ge")


def _tighten_and_literals(pairs: list) -> Optional[list]:
    """Tighten conjoined literals; None means the conjunction is false."""
    by_form: dict[tuple, list] = {}
    form_order: list = []
    enum_pos: dict[Variable, set] = {}
    enum_neg: dict[Variable, set] = {}
    bools: dict[Variable, bool] = {}
    for atom, pos in pairs:
        if isinstance(atom, LinearAtom):
            if atom.coeffs not in by_form:
                form_order.append(atom.coeffs)
            by_form.setdefault(atom.coeffs, []).append(_lin_kind(atom, pos))
        elif isinstance(atom, EnumAtom):
            (enum_pos if pos else enum_neg).setdefault(atom.var, set()).add(atom.symbol)
        else:
            prev = bools.get(atom.var)
            if prev is not None and prev != pos:
                return None
            bools[atom.var] = pos
    out: list = []
    for var in sorted(bools, key=lambda v: v.name):
        out.append((BoolAtom(var), bools[var]))
    for var in sorted(set(enum_pos) | set(enum_neg), key=lambda v: v.name):
        chosen = enum_pos.get(var, set())
        banned = enum_neg.get(var, set())
        if len(chosen) > 1 or (chosen & banned):
            return None
        if chosen:
            out.append((EnumAtom(var, next(iter(chosen))), True))
            continue
        allowed = [s for s in var.sort if s not in banned]
        if not allowed:
            return None
        if len(allowed) == 1:
            out.append((EnumAtom(var, allowed[0]), True))
        else:
            for s in sorted(banned):
                out.append((EnumAtom(var, s), False))
    for form in form_order:
        kinds = by_form[form]
        eqs = {b for k, b in kinds if k == "eq"}
        nes = {b for k, b in kinds if k == "ne"}
        lo = hi = None
        lo_strict = hi_strict = False
        for k, b in kinds:
            if k in ("le", "lt"):
                strict = k == "lt"
                if hi is None or b < hi or (b == hi and strict):
                    hi, hi_strict = b, strict
            elif k in ("ge", "gt"):
                strict = k == "gt"
                if lo is None or b > lo or (b == lo and strict):
                    lo, lo_strict = b, strict
        if eqs:
            if len(eqs) > 1:
                return None
            point = next(iter(eqs))
            if point in nes:
                return None
            if lo is not None and (point < lo or (point == lo and lo_strict)):
                return None
            if hi is not None and (point > hi or (point == hi and hi_strict)):
                return None
            out.append((LinearAtom(form, "=", point), True))
            continue
        if lo is not None and hi is not None:
            if lo > hi or (lo == hi and (lo_strict or hi_strict)):
                return None
            if lo == hi:
                if lo in nes:
                    return None
                out.append((LinearAtom(form, "=", lo), True))
                continue
        if hi is not None:
            out.append(_emit_kind(form, "lt" if hi_strict else "le", hi))
        if lo is not None:
            out.append(_emit_kind(form, "gt" if lo_strict else "ge", lo))
        for b in sorted(nes):
            outside = (
                lo is not None and (b < lo or (b == lo and lo_strict))
            ) or (hi is not None and (b > hi or (b == hi and hi_strict)))
            if not outside:
                out.append((LinearAtom(form, "=", b), False))
    return out


def _emit_kind(form: tuple, k: str, b: Fraction):
    if k == "le":
        return (LinearAtom(form, "<=", b), True)
    if k == "lt":
        return (LinearAtom(form, "<", b), True)
    if k == "ge":  # t >= b  ==  not (t < b)
        return (LinearAtom(form, "<", b), False)
    return (LinearAtom(form, "<=", b), False)  # gt


def _lit_of(pair) -> Formula:
    """Literal formula for a (possibly Fraction-bounded) internal pair."""
    atom, pos = pair
    if isinstance(atom, LinearAtom) and not isinstance(atom.bound, int):
        f = linear_atom(dict(atom.coeffs), atom.rel, atom.bound)
        return f if pos else neg(f)
    return Lit(atom, pos)


def _pair_key(pair) -> str:
    atom, pos = pair
    return atom_sort_key(atom) + ("+" if pos else "-")


def _clause_lits(g: Formula) -> Optional[frozenset]:
    if isinstance(g, Lit):
        return frozenset([(g.atom, g.positive)])
    if isinstance(g, And) and all(isinstance(a, Lit) for a in g.args):
        return frozenset((a.atom, a.positive) for a in g.args)
    return None


def _simp_and(args: list) -> Formula:
    pairs = []
    others = []
    for a in args:
        if isinstance(a, Lit):
            pairs.append((a.atom, a.positive))
        else:
            others.append(a)
    tightened = _tighten_and_literals(pairs)
    if tightened is None:
        return FALSE
    lit_set = set(tightened)
    neg_set = {(a, not p) for a, p in lit_set}
    out_lits = [_lit_of(p) for p in tightened]
    extra = []
    for g in others:
        if isinstance(g, Or):
            absorbed = False
            changed = False
            parts = []
            for d in g.args:
                if isinstance(d, Lit):
                    key = (d.atom, d.positive)
                    if key in lit_set:
                        absorbed = True  # a conjoined literal covers this disjunction
                        break
                    if key in neg_set:
                        changed = True  # unit resolution removes the disjunct
                        continue
                parts.append(d)
            if absorbed:
                continue
            if changed:
                g = disj(*parts)
                if g == FALSE:
                    return FALSE
                if g == TRUE:
                    continue
                if isinstance(g, Lit):
                    key = (g.atom, g.positive)
                    if (g.atom, not g.positive) in lit_set:
                        return FALSE
                    if key not in lit_set:
                        lit_set.add(key)
                        neg_set.add((g.atom, not g.positive))
                        out_lits.append(g)
                    continue
        extra.append(g)
    return conj(*(out_lits + extra))


def _prune_or_literals(pairs: list) -> Optional[list]:
    """Prune disjoined literals; None means the disjunction is a tautology."""
    enum_pos: dict[Variable, set] = {}
    enum_neg: dict[Variable, set] = {}
    kinds_by_form: dict[tuple, list] = {}
    for i, (atom, pos) in enumerate(pairs):
        if isinstance(atom, EnumAtom):
            (enum_pos if pos else enum_neg).setdefault(atom.var, set()).add(atom.symbol)
        elif isinstance(atom, LinearAtom):
            kinds_by_form.setdefault(atom.coeffs, []).append((i, _lin_kind(atom, pos)))
    for var, banned in enum_neg.items():
        if len(banned) > 1 or (banned & enum_pos.get(var, set())):
            return None
    for var, syms in enum_pos.items():
        if set(var.sort) <= syms:
            return None
    drop: set = set()
    for entries in kinds_by_form.values():
        for x, (i, ki) in enumerate(entries):
            for y, (j, kj) in enumerate(entries):
                if x == y:
                    continue
                if _kinds_cover_line(ki, kj):
                    return None
                if _kind_implies(ki, kj):
                    drop.add(i)  # the stronger disjunct is redundant
    for i, (atom, pos) in enumerate(pairs):
        if isinstance(atom, EnumAtom) and pos:
            if any(t != atom.symbol for t in enum_neg.get(atom.var, ())):
                drop.add(i)
    return [p for i, p in enumerate(pairs) if i not in drop]


def _simp_or(args: list) -> Formula:
    pairs = []
    others = []
    for a in args:
        if isinstance(a, Lit):
            pairs.append((a.atom, a.positive))
        else:
            others.append(a)
    lit_set = set(pairs)
    for atom, pos in pairs:
        if (atom, not pos) in lit_set:
            return TRUE
    pruned = _prune_or_literals(pairs)
    if pruned is None:
        return TRUE
    lit_set = set(pruned)
    neg_set = {(a, not p) for a, p in lit_set}
    entries = []
    for g in others:
        cl = _clause_lits(g)
        if cl is None:
            entries.append((None, g))
            continue
        if cl & lit_set:
            continue  # absorbed: a disjoined literal already appears in the clause
        filtered = frozenset(p for p in cl if p not in neg_set)
        if not filtered:
            return TRUE
        if filtered != cl:
            g = conj(*(Lit(a, p) for a, p in sorted(filtered, key=_pair_key)))
            if isinstance(g, Lit):
                key = (g.atom, g.positive)
                if (g.atom, not g.positive) in lit_set:
                    return TRUE
                if key not in lit_set:
                    pruned.append(key)
                    lit_set.add(key)
                    neg_set.add((g.atom, not g.positive))
                continue
            cl = filtered
        entries.append((cl, g))
    kept = []
    for idx, (cl, g) in enumerate(entries):
        if cl is not None:
            dominated = False
            for jdx, (cl2, _) in enumerate(entries):
                if jdx == idx or cl2 is None:
                    continue
                if cl2 < cl or (cl2 == cl and jdx < idx):
                    dominated = True
                    break
            if dominated:
                continue
        kept.append(g)
    return disj(*([_lit_of(p) for p in pruned] + kept))


def _simp(f: Formula, memo: dict) -> Formula:
    hit = memo.get(id(f))
    if hit is not None:
        return hit
    if isinstance(f, (Const, Lit)):
        r = f
    elif isinstance(f, Not):
        r = neg(_simp(f.arg, memo))
    elif isinstance(f, And):
        flat = conj(*(_simp(a, memo) for a in f.args))
        r = _simp_and(list(flat.args)) if isinstance(flat, And) else flat
    else:
        flat = disj(*(_simp(a, memo) for a in f.args))
        r = _simp_or(list(flat.args)) if isinstance(flat, Or) else flat
    memo[id(f)] = r
    return r


def simplify(f: Formula) -> Formula:
    """Equivalence-preserving cleanup: constant folding, bound tightening,
    unit resolution, absorption, and syntactic clause subsumption."""
    g = to_nnf(f)
    for _ in range(3):
        g2 = _simp(g, {})
        if g2 == g:
            return g
        g = g2
    return g


# ---------------------------------------------------------------------------
# SMT-LIB2 serialization (escape hatch for differential testing)


def _smt_num(n) -> str:
    n = Fraction(n)
    if n.denominator != 1:
        return f"(/ {_smt_num(n.numerator)} {n.denominator})"
    if n < 0:
        return f"(- {-n})"
    return str(n.numerator)


def _smt_ident(name: str) -> str:
    return name if name.isidentifier() else "|" + name + "|"


def _smt_formula(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Not):
        return f"(not {_smt_formula(f.arg)})"
    if isinstance(f, And):
        return "(and " + " ".join(_smt_formula(a) for a in f.args) + ")"
    if isinstance(f, Or):
        return "(or " + " ".join(_smt_formula(a) for a in f.args) + ")"
    atom = f.atom
    if isinstance(atom, LinearAtom):
        terms = []
        for v, c in atom.coeffs:
            ident = _smt_ident(v.name)
            terms.append(ident if c == 1 else f"(* {_smt_num(c)} {ident})")
        lhs = terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"
        s = f"({atom.rel} {lhs} {_smt_num(atom.bound)})"
    elif isinstance(atom, BoolAtom):
        s = _smt_ident(atom.var.name)
    else:
        s = f"(= {_smt_ident(atom.var.name)} {atom.symbol})"
    return s if f.positive else f"(not {s})"


def to_smtlib(f: Formula) -> str:
    vs = sorted(free_vars(f), key=lambda v: v.name)
    lines = ["(set-logic ALL)"]
    enum_sorts: dict[tuple, str] = {}
    for v in vs:
        if isinstance(v.sort, tuple) and v.sort not in enum_sorts:
            name = f"Enum{len(enum_sorts)}"
            enum_sorts[v.sort] = name
            ctors = " ".join(f"({s})" for s in v.sort)
            lines.append(f"(declare-datatypes (({name} 0)) (({ctors})))")
    for v in vs:
        ident = _smt_ident(v.name)
        if v.sort == RATIONAL:
            lines.append(f"(declare-const {ident} Real)")
        elif v.sort == BOOLEAN:
            lines.append(f"(declare-const {ident} Bool)")
        else:
            lines.append(f"(declare-const {ident} {enum_sorts[v.sort]})")
    lines.append(f"(assert {_smt_formula(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines)
