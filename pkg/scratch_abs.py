import time
from fractions import Fraction

from obsynth.formulas import (
    FALSE, Variable, RATIONAL, BOOLEAN, bool_var, conj, disj, enum_eq,
    linear_atom, neg, prime, to_sexpr,
)
from obsynth.model import State, SystemModel
from obsynth.abstraction import (
    Abstraction, alpha, bits_str, build_abstract_game, initial_abstract_state,
    initial_predicates,
)

SIGMA = ("east", "west", "north", "south")
x = Variable("x", "input", RATIONAL)
y = Variable("y", "input", RATIONAL)
u = Variable("u", "output", SIGMA)
t = Variable("t", "turn", BOOLEAN)
xp, yp = prime(x), prime(y)
up, tp = prime(u), prime(t)

def eq(a, b, c=0):
    return linear_atom({a: 1, b: -1}, "=", c)

trans = disj(
    conj(bool_var(t), neg(bool_var(tp)), eq(xp, x), eq(yp, y),
         disj(*(enum_eq(up, s) for s in SIGMA))),
    conj(neg(bool_var(t)), bool_var(tp), disj(
        conj(enum_eq(u, "east"), eq(xp, x, 2), eq(yp, y)),
        conj(enum_eq(u, "west"), eq(xp, x, -2), eq(yp, y)),
        conj(enum_eq(u, "north"), eq(xp, x),
             linear_atom({yp: 1, y: -1}, ">=", 1), linear_atom({yp: 1, y: -1}, "<=", Fraction(3, 2))),
        conj(enum_eq(u, "south"), eq(xp, x),
             linear_atom({yp: 1, y: -1}, "<=", -1), linear_atom({yp: 1, y: -1}, ">=", Fraction(-3, 2))),
    )),
)
init = conj(linear_atom({x: 1}, "=", 4), linear_atom({y: 1}, "=", 3),
            enum_eq(u, "east"), bool_var(t))
error = conj(neg(bool_var(t)), disj(
    linear_atom({x: 1}, ">=", 9), linear_atom({y: 1}, ">=", 4),
    linear_atom({x: 1}, "<=", -1), linear_atom({y: 1}, "<=", -4),
))
m = SystemModel([x, y, u, t], trans, init, error, {y: FALSE})

t0 = time.time()
pset = initial_predicates(m)
print("predicates:", pset.describe())
assert len(pset) == 9

v0 = State({"x": 4, "y": 3, "u": "east", "t": True})
bits0 = alpha(v0, pset)
print("alpha(v0):", bits_str(bits0))
assert bits_str(bits0) == "000010001"

s0 = initial_abstract_state(m, pset)
print("s0^a:", s0, "player", s0.player)
assert [bits_str(b) for b in s0.members] == ["000010001"]
assert s0.player == 1

game = build_abstract_game(m, pset)
print("states:", len(game), "unsafe:", sorted(game.unsafe))
root_moves = game.edges1[0]
print("root moves:", [(sig, j, game.states[j]) for sig, j in root_moves])
assert len(root_moves) == 4
west_targets = [j for sig, j in root_moves if sig == "west"]
assert len(west_targets) == 1
tgt = game.states[west_targets[0]]
assert [bits_str(b) for b in tgt.members] == ["000001000"], tgt
print("sigma_2 target matches {000001000}")

# walk the whole game, show structure
for i, st in enumerate(game.states):
    kind = "E" if i in game.unsafe else ("P1" if st.player == 1 else "P2")
    if st.player == 1 and i not in game.unsafe:
        outs = [(sig, j) for sig, j in game.edges1.get(i, [])]
    else:
        outs = game.edges2.get(i, [])
    print(f"  {i} {kind} {st} -> {outs}")

ab = game.abstraction
for st in game.states:
    keys = {ab.obs_key(b) for b in st.members}
    assert len(keys) == 1
print("lemma-2 uniformity ok; elapsed %.2fs" % (time.time() - t0))
print("ALL OK")
