"""
Protected timing
================

Adding a normally distributed delay after every activation call hides the
cluster structure. Negative draws are redrawn, so a delay never shortens a
call.
"""

import numpy as np

from actdesync import LONG_DELAY, REFERENCE_DELAY, capture_trace, protect_trace

for dist in (REFERENCE_DELAY, LONG_DELAY):
    print(f"delay {dist.label}: mean {dist.mean} s, variance {dist.variance} s^2, "
          f"expected after truncation {dist.expected_mean:.4e} s")
    for i, kind in enumerate(["relu", "sigmoid", "tanh"]):
        base = capture_trace(kind, 2000, seed=i)
        prot = protect_trace(base, dist, seed=100 + i)
        d = prot.durations * 1e3
        print(f"  {kind:8s} mean {d.mean():.3f} ms  min {d.min():.3f}  max {d.max():.3f}  std {d.std(ddof=1):.3f}")

# %%
# The per-call gap between activations is now far below the delay noise.
r = protect_trace(capture_trace("relu", 2000, seed=1), LONG_DELAY, seed=2).durations
t = protect_trace(capture_trace("tanh", 2000, seed=3), LONG_DELAY, seed=4).durations
print()
print(f"relu vs tanh mean gap {abs(r.mean() - t.mean()) * 1e3:.3f} ms, "
      f"pooled std {np.sqrt((r.var(ddof=1) + t.var(ddof=1)) / 2) * 1e3:.3f} ms")
