"""
Telling activations apart
=========================

An attacker who sees a few timings from an unknown activation picks the
candidate whose expected mean is closest to the observed mean.
"""

from actdesync import REFERENCE_DELAY, accuracy_sweep, capture_trace, distinguish, reference_profiles

profiles = reference_profiles()

v = distinguish(capture_trace("sigmoid", 10, seed=3).durations, profiles)
print(f"10 sigmoid timings classified as {v.predicted}")
print("  distance to each candidate:", ", ".join(f"{k} {s:.2e} s" for k, s in v.scores.items()))

# %%
# Accuracy over 1000 trials per activation, with and without the delay.
print()
for q in (10, 1):
    u = accuracy_sweep(profiles, None, q, 1000, seed=1)
    p = accuracy_sweep(profiles, REFERENCE_DELAY, q, 1000, seed=1)
    print(f"{q:2d} queries: unprotected {u.overall_accuracy:.3f}, protected {p.overall_accuracy:.3f} (chance 0.333)")

print()
print("protected confusion matrix, rows = true, columns = predicted (relu, sigmoid, tanh)")
print(accuracy_sweep(profiles, REFERENCE_DELAY, 10, 1000, seed=1).confusion)
