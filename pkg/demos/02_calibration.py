"""
Calibrating the random delay
============================

The delay distribution is derived from unprotected timings alone: the gap
between the fastest and slowest cluster sets the mean, and the order of
magnitude of the total spread sets the variance.
"""

import numpy as np

from actdesync import calibrate, capture_trace, find_clusters

# Pool 2000 timings from every activation.
pooled = np.concatenate([capture_trace(k, 2000, seed=i).durations for i, k in enumerate(["relu", "sigmoid", "tanh"])])

# Clusters are found by splitting at large gaps, then refined with 1-D k-means.
for c in find_clusters(pooled):
    print(f"cluster at {c.center * 1e3:.4f} ms with {c.size} samples")

# %%
report = calibrate(pooled)
print()
print(f"fastest cluster t_f = {report.t_f:.4e} s")
print(f"slowest cluster t_s = {report.t_s:.4e} s")
print(f"total spread        = {report.delta_t:.4e} s (order of magnitude {report.magnitude})")
print(f"delay mean          = {report.result.mean} s")
print(f"delay variance      = {report.result.variance} s^2")
print(f"inputs digest       = {report.inputs_digest}")
