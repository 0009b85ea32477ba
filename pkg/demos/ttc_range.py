"""Collision analytics from tracked state: inverse TTC and range.

Two short stories. First a pair of taillights whose separation grows
exponentially, so the true inverse time-to-contact is a constant the
estimate should sit on. Then a known-diameter target closing from 17 m to
8 m, where the major axis of the tracked shape is the rangefinder.
"""

import numpy as np

from evblob import run, synth
from evblob.config import RunConfig
from evblob.engine import StreamEngine


def taillights():
    sc = synth.taillight_scenario(seed=0)
    events, _, _ = synth.generate(sc)
    engine = StreamEngine(RunConfig(seeds=[(0.0, 590.0, 360.0),
                                           (0.0, 690.0, 360.0)]))
    series = run.ttc_from_rows(engine.feed(events), 0, 1, threshold=0.3)
    t, inv = series["t"], series["inv_tau"]
    print(f"taillights: {t.size} TTC samples from {len(events)} events")
    for probe in (0.25, 0.5, 1.0, 1.5, 2.0):
        i = np.searchsorted(t, probe) - 1
        print(f"  t={probe:4.2f}  1/tau={inv[i]:.3f}  (true 0.500)  "
              f"sep={series['s'][i]:6.1f} px")


def approach():
    sc = synth.approach_scenario(seed=3)
    events, _, _ = synth.generate(sc)
    engine = StreamEngine(RunConfig(seeds=[(0.0, 640.0, 360.0)], n_buffer=14,
                                    qlambda=0.1, qtheta=0.003, qq=0.03,
                                    init_lambda=17.6, focal=1000.0))
    series = run.range_from_rows(engine.feed(events), 0,
                                 sc.extras["diameter_m"], sc.intrinsics)
    t, z = series["t"], series["range_m"]
    z_true = sc.extras["range_at"](t)
    print(f"\napproach: {len(events)} events, 0.3 m target")
    for probe in (1.0, 2.0, 3.0, 4.0, 5.0):
        i = np.searchsorted(t, probe) - 1
        print(f"  t={probe:3.1f}  range {z[i]:5.2f} m  true {z_true[i]:5.2f} m  "
              f"({(z[i] / z_true[i] - 1) * 100:+.1f}%)")


if __name__ == "__main__":
    taillights()
    approach()
