from fractions import Fraction

from obsynth.formulas import (
    TRUE, FALSE, Variable, RATIONAL, BOOLEAN, bool_var, conj, disj, enum_eq,
    linear_atom, neg, prime, to_sexpr,
)
from obsynth.model import (
    State, SystemModel, initial_state, observe, sample_successor, validate_model,
)

SIGMA = ("east", "west", "north", "south")
x = Variable("x", "input", RATIONAL)
y = Variable("y", "input", RATIONAL)
u = Variable("u", "output", SIGMA)
t = Variable("t", "turn", BOOLEAN)
xp, yp, up, tp = prime(x), prime(y), prime(u), prime(t)

def eq(a, b, c=0):
    return linear_atom({a: 1, b: -1}, "=", c)

sys_move = conj(
    bool_var(t), neg(bool_var(tp)), eq(xp, x), eq(yp, y),
    disj(*(enum_eq(up, s) for s in SIGMA)),
)
env_move = conj(
    neg(bool_var(t)), bool_var(tp),
    disj(
        conj(enum_eq(u, "east"), eq(xp, x, 2), eq(yp, y)),
        conj(enum_eq(u, "west"), eq(xp, x, -2), eq(yp, y)),
        conj(enum_eq(u, "north"), eq(xp, x),
             linear_atom({yp: 1, y: -1}, ">=", 1), linear_atom({yp: 1, y: -1}, "<=", Fraction(3, 2))),
        conj(enum_eq(u, "south"), eq(xp, x),
             linear_atom({yp: 1, y: -1}, "<=", -1), linear_atom({yp: 1, y: -1}, ">=", Fraction(-3, 2))),
    ),
)
trans = disj(sys_move, env_move)
init = conj(linear_atom({x: 1}, "=", 4), linear_atom({y: 1}, "=", 3),
            enum_eq(u, "east"), bool_var(t))
error = conj(neg(bool_var(t)), disj(
    linear_atom({x: 1}, ">=", 9), linear_atom({y: 1}, ">=", 4),
    linear_atom({x: 1}, "<=", -1), linear_atom({y: 1}, "<=", -4),
))
m = SystemModel([x, y, u, t], trans, init, error, {y: FALSE})

rep = validate_model(m)
print("validation:", rep)
assert rep.ok

v0 = initial_state(m)
print("v0:", v0)
assert v0["x"] == 4 and v0["y"] == 3 and v0["u"] == "east" and v0["t"] is True

obs = observe(v0, m)
print("obs:", obs)
assert obs.visible == {"x", "u", "t"}
assert "y" not in obs.values

v = State({"x": 4, "y": 3, "u": "north", "t": False})
seen = set()
for seed in range(6):
    nxt = sample_successor(v, m, seed=seed)
    assert nxt["x"] == 4 and nxt["t"] is True and nxt["u"] == "north"
    assert Fraction(4) <= nxt["y"] <= Fraction(9, 2), nxt
    seen.add(nxt["y"])
print("sampled y' values:", sorted(seen))
assert len(seen) > 1

pin = linear_atom({yp: 1}, "=", 4)
nxt = sample_successor(v, m, constraint=pin, seed=5)
assert nxt["y"] == 4

# system turn: u' free, x/y frozen
vs = State({"x": 0, "y": 0, "u": "east", "t": True})
outs = {sample_successor(vs, m, seed=s)["u"] for s in range(12)}
print("system outputs sampled:", sorted(outs))
assert all(sample_successor(vs, m, seed=s)["x"] == 0 for s in range(3))

# blocking model
bad = SystemModel([x, y, u, t], FALSE, init, error, {y: FALSE})
rep2 = validate_model(bad)
print("blocking model:", rep2)
assert any(v.code == "Blocking" for v in rep2.violations)

# sensor scope violation
from obsynth.formulas import var_eq
bad_sensor = SystemModel([x, y, u, t], trans, init, error, {y: enum_eq(u, "east")})
rep3 = validate_model(bad_sensor)
print("sensor scope:", rep3)
assert any(v.code == "SensorScope" for v in rep3.violations)

# observation split: y in {3, 5} only matters when y is observable
init2 = conj(linear_atom({x: 1}, "=", 4),
             disj(linear_atom({y: 1}, "=", 3), linear_atom({y: 1}, "=", 5)),
             enum_eq(u, "east"), bool_var(t))
hidden_y = SystemModel([x, y, u, t], trans, init2, error, {y: FALSE})
assert validate_model(hidden_y, check_nonblocking=False).ok
visible_y = SystemModel([x, y, u, t], trans, init2, error, {})
rep4 = validate_model(visible_y, check_nonblocking=False)
print("split:", rep4)
assert any(v.code == "InitObservationSplit" for v in rep4.violations)

# init underdetermined
init3 = conj(linear_atom({x: 1}, "=", 4), linear_atom({y: 1}, "=", 3), bool_var(t))
loose = SystemModel([x, y, u, t], trans, init3, error, {y: FALSE})
rep5 = validate_model(loose, check_nonblocking=False)
print("loose init:", rep5)
assert any(v.code == "InitOutputFree" for v in rep5.violations)

print("ALL OK")
