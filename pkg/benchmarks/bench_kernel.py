"""Compare the compiled kernel with the pure-Python backend.

    python benchmarks/bench_kernel.py [--count 840] [--repeat 3] [--workers 4]

Prints one line per (rule, backend) with the best wall time, instances per
second and the speedup, and checks that both backends agree exactly.
"""

import argparse
import time

from crpgp.instances import generate_dataset
from crpgp.kernel import HAVE_KERNEL, Dataset, evaluate
from crpgp.rules import EXAMPLE_RULE, parse_rule
from crpgp.schemes import RelocationRule


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=840)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--workers", type=int, default=4)
    a = ap.parse_args()

    ds = Dataset([y for _, y in generate_dataset("caserta", a.count, a.seed)])
    example = parse_rule(EXAMPLE_RULE)
    rules = {
        "MINMAX": RelocationRule("RE", baseline="MINMAX"),
        "RE example": RelocationRule("RE", (example,)),
        "UN example": RelocationRule("UN", (example,)),
        "UNC example": RelocationRule("UNC", (example,)),
    }
    if not HAVE_KERNEL:
        print("compiled kernel not built; only the Python backend is available")
    print(f"{'rule':10} {'backend':18} {'seconds':>9} {'inst/s':>10} {'speedup':>8}")
    for name, rule in rules.items():
        tp, ref = timed(lambda: evaluate(ds, rule, backend="python"), 1)
        print(f"{name:10} {'python':18} {tp:9.3f} {a.count / tp:10.0f} {1.0:8.1f}")
        if not HAVE_KERNEL:
            continue
        for workers in (1, a.workers):
            tc, res = timed(lambda: evaluate(ds, rule, workers=workers, backend="compiled"), a.repeat)
            same = (res.relocations == ref.relocations).all() and (res.crane_seconds == ref.crane_seconds).all() \
                and (res.status == ref.status).all()
            label = f"compiled x{workers}"
            print(f"{name:10} {label:18} {tc:9.4f} {a.count / tc:10.0f} {tp / tc:8.1f}"
                  + ("" if same else "  MISMATCH"))


if __name__ == "__main__":
    main()
