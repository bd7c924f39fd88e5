import time

from obsynth.specfile import parse_model
from obsynth.model import validate_model
from obsynth import refinement

for name in ("forced", "drift"):
    text = open(f"benchmarks/{name}.spec").read()
    m = parse_model(text)
    rep = validate_model(m)
    print(f"{name}: validate {'ok' if rep.ok else rep}")
    assert rep.ok

    t0 = time.time()
    report = refinement.sensor_reconfigure(m)
    dt = time.time() - t0
    print(f"{name}: verdict={report.verdict} in {dt:.1f}s")
    for line in report.lines():
        print("   ", line)
    print("    original:", [r.line() for r in report.original.log][-1])
    if report.full is not None:
        print("    full:", [r.line() for r in report.full.log][-1])
    print()
