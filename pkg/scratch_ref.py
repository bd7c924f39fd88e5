import time

import scratch_abs as S
from obsynth import engine
from obsynth.abstraction import bits_str
from obsynth.games import FiniteGame, solve_safety
from obsynth.refinement import (
    Budget, Genuine, Spurious, abstract_and_refine, build_act, check_genuine,
    refine_transitions,
)
from obsynth.formulas import to_sexpr

fin = FiniteGame.from_abstract(S.game)
win = solve_safety(fin)
assert win.player == 2

t0 = time.time()
act = build_act(S.game, win.strategy)
print("act nodes:", len(act.nodes))
print("\n".join(act.dump()))
print("root traces:", act.traces(act.root))
assert len(act.traces(act.root)) == 16

# the ACT must contain the spurious x<=-1 branch (state 7, bits 001001001)
branch = [n for n in act.nodes if any(bits_str(b) == "001001001" for b in n.label.members)]
assert branch, "expected the x<=-1 knowledge state in the tree"
print("x<=-1 branch at nodes:", [n.id for n in branch])

verdict = check_genuine(act)
print("verdict:", verdict, "%.2fs" % (time.time() - t0))
assert isinstance(verdict, Spurious) and verdict.kind == "transition"
print("failing pairs:", verdict.pairs[:6], "... total", len(verdict.pairs))

pset2 = refine_transitions(act, verdict.pairs, S.pset)
print("new predicates:", [str(p) for p in pset2.predicates[len(S.pset):]])

t0 = time.time()
out = abstract_and_refine(S.m)
print("loop verdict:", out.verdict, "in %.1fs" % (time.time() - t0))
for rec in out.log:
    print(" ", rec.line())
print("final predicates:", out.predicates.describe())
assert out.verdict == "realizable"
print("ALL OK")
