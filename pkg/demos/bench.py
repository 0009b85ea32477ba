"""Throughput benchmark; pass sizes as arguments (default 1e5 1e6 1e7)."""

import sys

from evblob import run

sizes = tuple(int(float(a)) for a in sys.argv[1:]) or (100_000, 1_000_000, 10_000_000)
report = run.run_bench(sizes, seed=0)
for r in report["sizes"]:
    print(f"{r['n_events']:>9} events: {r['seconds']:6.2f} s  "
          f"{r['events_per_s'] / 1e6:.2f} Mev/s")
print(f"scaling exponent: {report['scaling_exponent']:.3f}")
