"""
Deployment overhead
===================

A dense neuron spends fan_in multiply-adds before its activation, so a delay
of a few milliseconds is a modest fraction of the neuron's total time when
the fan-in is large.
"""

from actdesync.overhead import (
    REFERENCE_ACTIVATION_RANGE,
    REFERENCE_PROTECTED_RANGE,
    Layer,
    NetworkCostModel,
    overhead_report,
    vgg19_classifier,
)

r = overhead_report(vgg19_classifier(), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE)
lay = r.layers[0]
print("VGG-19 output layer (fan-in 4096, 1000 neurons)")
print(f"  neuron time     {lay.baseline_range[0]:.5f} - {lay.baseline_range[1]:.5f} s")
print(f"  protected       {lay.protected_range[0]:.5f} - {lay.protected_range[1]:.5f} s")
print(f"  overhead        {lay.overhead_range[0]:.2f}% - {lay.overhead_range[1]:.2f}%")
print(f"  extreme pairing {lay.extreme_overhead_range[0]:.2f}% - {lay.extreme_overhead_range[1]:.2f}%")
print(f"  whole layer     {lay.layer_baseline_range[1]:.1f} s -> {lay.layer_protected_range[1]:.1f} s")
print(f"  note: {r.note}")

# %%
# The relative cost falls as the fan-in grows.
print()
base = vgg19_classifier(None)
for fan_in in (10, 100, 1000, 4096, 25088):
    m = NetworkCostModel(base.mult_time, base.add_time, (Layer(fan_in, 1),))
    o = overhead_report(m, REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE).overhead_range
    print(f"fan-in {fan_in:6d}: {o[0]:8.2f}% - {o[1]:8.2f}%")
