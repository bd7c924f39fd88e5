from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obsynth.formulas import (
    BOOLEAN,
    FALSE,
    RATIONAL,
    TRUE,
    And,
    LinearAtom,
    Lit,
    Not,
    Or,
    SortMismatch,
    UnboundVariable,
    AtomNotCovered,
    Variable,
    atoms_of,
    bool_var,
    conj,
    disj,
    enum_eq,
    eval_with_atoms,
    evaluate,
    free_vars,
    iff,
    implies,
    is_primed,
    linear_atom,
    literals_in,
    neg,
    prime,
    rename,
    substitute,
    to_nnf,
    to_sexpr,
    unprime,
    var_eq,
)

a = Variable("a", "input", RATIONAL)
b = Variable("b", "input", RATIONAL)
p = Variable("p", "turn", BOOLEAN)
m = Variable("m", "output", ("red", "green", "blue"))


def test_prime_round_trip():
    ap = prime(a)
    assert ap.name == "a'"
    assert is_primed(ap) and not is_primed(a)
    assert unprime(ap) == a


def test_linear_atom_scales_to_coprime_ints():
    f = linear_atom({a: 2, b: -4}, "<=", 6)
    assert isinstance(f, Lit) and f.positive
    atom = f.atom
    assert atom.coeffs == ((a, 1), (b, -2))
    assert atom.rel == "<=" and atom.bound == 3


def test_linear_atom_fraction_coefficients():
    f = linear_atom({a: Fraction(1, 2)}, "<", Fraction(3, 4))
    atom = f.atom
    assert atom.coeffs == ((a, 2),) and atom.bound == 3


def test_negative_leading_coefficient_flips_polarity():
    f = linear_atom({a: -1}, "<=", -2)
    # -a <= -2 is the complement of a < 2
    assert isinstance(f, Lit) and not f.positive
    assert f.atom == LinearAtom(((a, 1),), "<", 2)


def test_ge_and_gt_are_negated_lt_le():
    assert linear_atom({a: 1}, ">=", 1) == neg(linear_atom({a: 1}, "<", 1))
    assert linear_atom({a: 1}, ">", 1) == neg(linear_atom({a: 1}, "<=", 1))


def test_constant_rows_collapse_to_consts():
    assert linear_atom({}, "<=", 0) is TRUE
    assert linear_atom({a: 0}, "<", 0) is FALSE
    assert linear_atom({}, "=", 1) is FALSE


def test_sort_guards():
    with pytest.raises(SortMismatch):
        linear_atom({p: 1}, "<=", 0)
    with pytest.raises(SortMismatch):
        enum_eq(m, "purple")
    with pytest.raises(SortMismatch):
        bool_var(a)
    with pytest.raises(SortMismatch):
        var_eq(a, p)


def test_var_eq_expansions():
    f = var_eq(m, Variable("n", "output", m.sort))
    # enum equality becomes a disjunction over shared symbols
    assert isinstance(f, Or) and len(f.args) == 3
    g = var_eq(p, Variable("q", "turn", BOOLEAN))
    assert evaluate(g, {"p": True, "q": True})
    assert not evaluate(g, {"p": True, "q": False})


def test_smart_constructors_flatten_and_prune():
    x = linear_atom({a: 1}, "<=", 0)
    y = linear_atom({b: 1}, "<=", 0)
    assert conj() is TRUE and disj() is FALSE
    assert conj(x, TRUE) == x
    assert conj(x, FALSE) is FALSE
    assert disj(x, TRUE) is TRUE
    f = conj(conj(x, y), x)
    assert isinstance(f, And) and f.args == (x, y)


def test_neg_is_an_involution_on_literals():
    x = linear_atom({a: 1}, "<=", 0)
    assert neg(neg(x)) == x
    assert neg(TRUE) is FALSE and neg(FALSE) is TRUE
    g = conj(x, bool_var(p))
    assert neg(neg(g)) == g


def test_free_vars_tracks_primed_copies_separately():
    f = conj(linear_atom({a: 1, prime(a): -1}, "<=", 0), bool_var(p))
    names = {v.name for v in free_vars(f)}
    assert names == {"a", "a'", "p"}


def test_atoms_of_is_ordered_and_deduplicated():
    x = linear_atom({a: 1}, "<=", 0)
    y = linear_atom({b: 1}, "<", 1)
    f = disj(conj(x, y), conj(neg(x), y))
    assert atoms_of(f) == [x.atom, y.atom]


def test_literals_in_reports_polarity():
    x = linear_atom({a: 1}, "<=", 0)
    lits = literals_in(conj(x, neg(bool_var(p))))
    assert (x.atom, True) in lits and (bool_var(p).atom, False) in lits


def test_evaluate_full_assignment():
    f = conj(
        linear_atom({a: 1, b: 1}, "<=", 3),
        enum_eq(m, "red"),
        neg(bool_var(p)),
    )
    good = {"a": Fraction(1), "b": 2, "m": "red", "p": False}
    assert evaluate(f, good)
    assert not evaluate(f, {**good, "b": 3})
    assert not evaluate(f, {**good, "m": "blue"})


def test_evaluate_missing_name_raises():
    with pytest.raises(UnboundVariable):
        evaluate(linear_atom({a: 1}, "<=", 0), {})


def test_eval_with_atoms_requires_coverage():
    x = linear_atom({a: 1}, "<=", 0)
    y = linear_atom({b: 1}, "<", 1)
    f = conj(x, y)
    assert eval_with_atoms(f, {x.atom: True, y.atom: True})
    with pytest.raises(AtomNotCovered):
        eval_with_atoms(f, {x.atom: True})


def test_substitute_constant_folds_into_bound():
    f = linear_atom({prime(a): 1, a: -1}, "=", 2)
    h = substitute(f, {prime(a): Fraction(5)})
    assert evaluate(h, {"a": 3})
    assert not evaluate(h, {"a": 4})


def test_substitute_merging_variables_sums_coefficients():
    f = linear_atom({a: 1, b: 1}, "<=", 4)
    h = substitute(f, {b: a})
    assert h == linear_atom({a: 2}, "<=", 4)
    assert substitute(bool_var(p), {p: True}) is TRUE
    assert substitute(enum_eq(m, "red"), {m: "blue"}) is FALSE


def test_rename_carries_assignments():
    c = Variable("c", "input", RATIONAL)
    f = linear_atom({a: 1}, "<=", 1)
    g = rename(f, {a: c})
    assert evaluate(g, {"c": 1})
    assert {v.name for v in free_vars(g)} == {"c"}


def test_to_sexpr_is_stable_text():
    f = conj(linear_atom({a: 1, b: -1}, "<=", Fraction(1, 2)), enum_eq(m, "red"))
    s = to_sexpr(f)
    assert s == to_sexpr(f)
    # halves scale to coprime integer coefficients
    assert "(<= (+ (* 2 a) (* -2 b)) 1)" in s and "red" in s


# --- randomized semantics checks ------------------------------------------

_symbols = st.sampled_from(m.sort)


def _atoms():
    small = st.integers(min_value=-4, max_value=4)
    lin = st.builds(
        lambda ca, cb, rel, k: linear_atom({a: ca, b: cb}, rel, k),
        small,
        small,
        st.sampled_from(("<=", "<", "=", ">=", ">")),
        small,
    )
    return st.one_of(lin, st.builds(bool_var, st.just(p)), st.builds(enum_eq, st.just(m), _symbols))


def _formulas():
    return st.recursive(
        _atoms(),
        lambda sub: st.one_of(
            st.builds(lambda x: neg(x), sub),
            st.builds(lambda x, y: conj(x, y), sub, sub),
            st.builds(lambda x, y: disj(x, y), sub, sub),
            st.builds(lambda x, y: implies(x, y), sub, sub),
        ),
        max_leaves=12,
    )


_assignments = st.fixed_dictionaries(
    {
        "a": st.fractions(min_value=-6, max_value=6, max_denominator=4),
        "b": st.fractions(min_value=-6, max_value=6, max_denominator=4),
        "p": st.booleans(),
        "m": _symbols,
    }
)


@settings(max_examples=200, deadline=None)
@given(_formulas(), _assignments)
def test_negation_complements_evaluation(f, val):
    assert evaluate(neg(f), val) != evaluate(f, val)


@settings(max_examples=200, deadline=None)
@given(_formulas(), _assignments)
def test_nnf_preserves_evaluation(f, val):
    g = to_nnf(f)
    assert evaluate(g, val) == evaluate(f, val)
    assert not _has_compound_negation(g)


def _has_compound_negation(f):
    if isinstance(f, Not):
        return True
    if isinstance(f, (And, Or)):
        return any(_has_compound_negation(x) for x in f.args)
    return False


@settings(max_examples=150, deadline=None)
@given(_formulas(), _assignments)
def test_iff_matches_equality_of_truth(f, val):
    g = iff(f, f)
    assert evaluate(g, val)
