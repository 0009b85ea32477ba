"""Track a blob orbiting at ramping speed and report error per flow band."""

import time

import numpy as np

from evblob import synth
from evblob.config import RunConfig
from evblob.engine import StreamEngine

DURATION = 30.0

sc = synth.spinning_scenario(duration=DURATION, background_rate=2500.0, seed=1)
events, _, _ = synth.generate(sc)
print(f"{len(events)} events over {DURATION:.0f} s, "
      f"peak flow {sc.extras['peak_flow']:.0f} px/s")

engine = StreamEngine(RunConfig(seeds=[(0.0, 940.0, 360.0)], qv=3e7))
t0 = time.perf_counter()
rows = engine.feed(events)
wall = time.perf_counter() - t0

t = rows[:, 0] * 1e-6
err = np.linalg.norm(rows[:, 2:4] - sc.blobs[0].trajectory(t)["p"], axis=1)
flow = sc.extras["flow_at"](t)

print(f"tracked in {wall:.1f} s ({len(events) / wall / 1e6:.2f} Mev/s), "
      f"alive={engine.track_alive(0)}")
for lo in range(0, int(flow.max()) // 2000 * 2000 + 1, 2000):
    sel = (flow >= lo) & (flow < lo + 2000)
    if sel.any():
        print(f"  flow {lo:>5}-{lo + 2000:<5} px/s: "
              f"rmse {np.sqrt((err[sel] ** 2).mean()):.2f} px over {sel.sum()} events")
