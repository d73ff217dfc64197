"""
Activation timing profiles
==========================

Each activation's execution time falls into a few clusters that depend on
the input. This demo samples 2000 uniform inputs per activation and shows
the clusters and the mean/min/max summary.
"""

import numpy as np

from actdesync import capture_trace, reference_profiles

profiles = reference_profiles()

# Each profile maps input regions to a cluster mean and a jitter spread.
for kind, p in profiles.items():
    print(f"{kind}: {len(p.clusters)} clusters")
    for c in p.clusters:
        regions = " u ".join(str(r) for r in c.region)
        print(f"  {regions:28s} {c.mean * 1e3:.4f} ms +/- {c.spread * 1e3:.4f}")

# %%
# A seeded campaign of 2000 uniform inputs on [-2, 2].
print()
print("activation  mean_ms  min_ms  max_ms")
traces = {}
for kind in profiles:
    t = capture_trace(kind, 2000, "uniform[-2,2]", seed=7)
    traces[kind] = t
    s = t.summary()
    print(f"{kind:10s} {s['mean'] * 1e3:8.4f} {s['min'] * 1e3:7.4f} {s['max'] * 1e3:7.4f}")

# %%
# A coarse text scatter: average duration per input bin shows the steps.
edges = np.linspace(-2, 2, 9)
for kind, t in traces.items():
    idx = np.digitize(t.inputs, edges[1:-1])
    row = [t.durations[idx == i].mean() * 1e3 for i in range(len(edges) - 1)]
    print(f"{kind:8s}", " ".join(f"{v:.4f}" for v in row))
