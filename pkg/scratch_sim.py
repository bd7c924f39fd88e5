import time

from obsynth.specfile import parse_model
from obsynth import refinement
from obsynth.simulate import run_strategy, run_many

m = parse_model(open("benchmarks/example2.spec").read())
out = refinement.abstract_and_refine(m)
assert out.verdict == "realizable"
game, strategy = out.game, out.strategy

t0 = time.time()
rec = run_strategy(m, game, strategy, steps=100, seed=1, adversary="random")
print(f"one run: {rec} in {time.time()-t0:.2f}s")
for v, obs, sigma in rec.steps[:6]:
    print("  ", dict(v), "->", sigma)

rec2 = run_strategy(m, game, strategy, steps=100, seed=1, adversary="random")
assert [s for s in rec.steps] == [s for s in rec2.steps], "not reproducible"
print("reproducible OK")

for adv in ("random", "attractor"):
    t0 = time.time()
    records = run_many(m, game, strategy, runs=20, steps=100, seed=7, adversary=adv)
    bad = [r for r in records if not r.safe]
    dt = time.time() - t0
    print(f"{adv}: {len(records)} runs, {len(bad)} unsafe, {dt:.1f}s ({dt/20:.2f}s/run)")
    assert not bad

print("ALL OK")
