import time

from obsynth.specfile import SpecDocument, parse_model, parse_formula_text
from obsynth.model import validate_model
from obsynth.abstraction import initial_predicates, build_abstract_game, PredicateSet
from obsynth.games import solve_safety, FiniteGame
from obsynth.formulas import to_sexpr
from obsynth import refinement

text = open("benchmarks/example2.spec").read()

doc = SpecDocument.parse(text)
assert SpecDocument.parse(doc.print()).tree() == doc.tree()
print("round trip OK")

notes = []
m = parse_model(text, notes)
print("notes:", notes)
print("vars:", [v.name for v in m.variables], "alphabet:", m.alphabet)
print("hidden:", [v.name for v in m.hidden_inputs()])

report = validate_model(m)
print("validate:", "ok" if report.ok else report)
assert report.ok

pset = initial_predicates(m)
print("preds:", pset.describe())

t0 = time.time()
game = build_abstract_game(m, pset)
print(f"game: {len(game.states)} states in {time.time()-t0:.2f}s")
s0 = game.states[game.initial]
print("initial:", s0)
assert repr(s0) == "{000010001}"

outcome = refinement.abstract_and_refine(m)
print("verdict:", outcome.verdict)
for rec in outcome.log:
    print(" ", rec.line())
assert outcome.verdict == "realizable"

for p in outcome.predicates:
    s = to_sexpr(p.formula(True))
    back = parse_formula_text(s, m)
    print(f"  {p} -> {s} -> reparse ok" if back is not None else "FAIL")

# error cases
for bad, what in [
    ("", "empty"),
    ("(system (input (x real))", "missing paren"),
    ("(system (input (x real)) (output (u (a))) (init (= q 1)) (trans true) (error false))", "unknown var"),
]:
    try:
        parse_model(bad)
        print("NO ERROR for", what)
    except Exception as exc:
        print(f"{what}: {type(exc).__name__}: {exc}")

print("ALL OK")
