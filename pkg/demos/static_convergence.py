"""Watch the filter find a static blob.

Generates two seconds of events from a stationary elliptical blob, starts a
track with a deliberately wrong initial size (2x), and prints the estimate
every 200 ms. Good first contact with the library: everything observable
happens in one table.
"""

import numpy as np

from evblob import synth
from evblob.config import RunConfig
from evblob.engine import StreamEngine

CENTER = (640.0, 360.0)
LAM_TRUE = (9.0, 5.0)
THETA_TRUE = 0.4

sc = synth.linear_scenario(CENTER, v=(0.0, 0.0), lam=LAM_TRUE,
                           theta=THETA_TRUE, rate=20_000.0, duration=2.0,
                           seed=7)
events, _, _ = synth.generate(sc)

cfg = RunConfig(seeds=[(0.0, *CENTER)], expected_blob_size=max(LAM_TRUE))
engine = StreamEngine(cfg)
rows = engine.feed(events)

t = rows[:, 0] * 1e-6
print(f"{len(events)} events, {rows.shape[0]} matched")
print(f"{'t':>5} {'px':>8} {'py':>8} {'lam1':>6} {'lam2':>6} {'theta':>6}")
for probe in np.arange(0.2, 2.01, 0.2):
    i = np.searchsorted(t, probe) - 1
    st = rows[i]
    print(f"{probe:5.1f} {st[2]:8.2f} {st[3]:8.2f} "
          f"{max(st[8], st[9]):6.2f} {min(st[8], st[9]):6.2f} {st[6]:6.2f}")

print(f"\ntruth: p=({CENTER[0]}, {CENTER[1]}), lam={LAM_TRUE}, "
      f"theta={THETA_TRUE} (theta is defined modulo pi)")
