"""Per-neuron and per-layer cost of the delay countermeasure in a dense network.

A neuron costs ``fan_in`` multiplications and additions plus one activation
call; memory traffic is not modelled, so real overheads would be lower.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Mapping, Sequence

from .errors import ConfigError, DataError, DegenerateModelError

# device-level costs measured on the original target (seconds)
DEVICE_MULT_TIME = 1.165e-5
DEVICE_ADD_TIME = 1.124e-5
REFERENCE_ACTIVATION_RANGE = (0.21e-4, 5.99e-4)
REFERENCE_PROTECTED_RANGE = (3.11e-3, 10.01e-3)

MEMORY_NOTE = "memory operations are not modelled; including them would lower the overhead"


def round_sig(x: float, digits: int) -> float:
    if x == 0:
        return 0.0
    d = Decimal(repr(float(x)))
    return float(d.quantize(Decimal(1).scaleb(d.adjusted() - digits + 1), rounding=ROUND_HALF_EVEN))


@dataclass(frozen=True)
class Layer:
    fan_in: int
    neuron_count: int
    activation: str = "relu"

    def __post_init__(self):
        if self.fan_in < 1 or self.neuron_count < 1:
            raise ConfigError("fan_in and neuron_count must be >= 1")


@dataclass(frozen=True)
class NetworkCostModel:
    mult_time: float
    add_time: float
    layers: tuple[Layer, ...]
    # Round the per-neuron multiply-accumulate total to this many significant
    # figures before adding the activation. None keeps exact arithmetic.
    mac_sig_figs: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not (self.mult_time > 0 and self.add_time > 0):
            raise ConfigError("mult_time and add_time must be > 0")
        if not self.layers:
            raise ConfigError("network needs at least one layer")

    def mac_time(self, layer_index: int) -> float:
        t = self.layers[layer_index].fan_in * (self.mult_time + self.add_time)
        return t if self.mac_sig_figs is None else round_sig(t, self.mac_sig_figs)


def vgg19_classifier(mac_sig_figs: int | None = 1) -> NetworkCostModel:
    """VGG-19 output layer: 1000 neurons, each fed by the 4096-wide last hidden layer.

    ``mac_sig_figs=1`` rounds the 4096 multiply-adds to 0.09 s (exactly they
    are 0.0938 s), matching the reference baseline range.
    """
    return NetworkCostModel(
        DEVICE_MULT_TIME, DEVICE_ADD_TIME, (Layer(4096, 1000, "output"),), mac_sig_figs=mac_sig_figs
    )


def _check_range(r) -> tuple[float, float]:
    lo, hi = float(r[0]), float(r[1])
    if not lo <= hi:
        raise DataError(f"range min exceeds max: {r}")
    return lo, hi


def neuron_time_range(model: NetworkCostModel, layer_index: int, activation_time_range) -> tuple[float, float]:
    if not 0 <= layer_index < len(model.layers):
        raise ConfigError(f"layer index {layer_index} out of range")
    lo, hi = _check_range(activation_time_range)
    mac = model.mac_time(layer_index)
    return mac + lo, mac + hi


@dataclass(frozen=True)
class LayerOverhead:
    layer_index: int
    baseline_range: tuple[float, float]
    protected_range: tuple[float, float]
    layer_baseline_range: tuple[float, float]
    layer_protected_range: tuple[float, float]
    overhead_range: tuple[float, float]  # percent; min vs min, max vs max
    extreme_overhead_range: tuple[float, float]  # percent; best and worst pairing of the two ranges

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class OverheadReport:
    layers: tuple[LayerOverhead, ...]
    note: str = field(default=MEMORY_NOTE)

    @property
    def baseline_range(self):
        return self.layers[0].baseline_range

    @property
    def protected_range(self):
        return self.layers[0].protected_range

    @property
    def overhead_range(self):
        return self.layers[0].overhead_range

    def to_dict(self) -> dict:
        return {"layers": [lay.to_dict() for lay in self.layers], "note": self.note}


def _range_for(ranges, activation: str):
    if isinstance(ranges, Mapping):
        for key in (activation, "*"):
            if key in ranges:
                return _check_range(ranges[key])
        raise ConfigError(f"no activation time range for {activation!r}")
    return _check_range(ranges)


def overhead_report(model: NetworkCostModel, unprotected_ranges, protected_ranges) -> OverheadReport:
    """Relative cost of the countermeasure for every layer.

    Ranges are ``(min, max)`` activation times in seconds, either one pair for
    all layers or a mapping from activation name (``"*"`` as fallback).
    ``overhead_range`` compares minima with minima and maxima with maxima;
    ``extreme_overhead_range`` pairs the protected minimum with the baseline
    maximum and vice versa, giving the widest possible spread.
    """
    out = []
    for i, layer in enumerate(model.layers):
        b = neuron_time_range(model, i, _range_for(unprotected_ranges, layer.activation))
        p = neuron_time_range(model, i, _range_for(protected_ranges, layer.activation))
        if b[0] <= 0:
            raise DegenerateModelError("baseline neuron time must be > 0")
        aligned = (100.0 * (p[0] - b[0]) / b[0], 100.0 * (p[1] - b[1]) / b[1])
        extreme = (100.0 * (p[0] - b[1]) / b[1], 100.0 * (p[1] - b[0]) / b[0])
        n = layer.neuron_count
        out.append(
            LayerOverhead(i, b, p, (n * b[0], n * b[1]), (n * p[0], n * p[1]), aligned, extreme)
        )
    return OverheadReport(tuple(out))


def model_from_dict(d: Mapping) -> NetworkCostModel:
    """Build a model from a network description document."""
    allowed = {"mult_time", "add_time", "layers", "mac_sig_figs", "schema_version"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown network keys: {sorted(unknown)}")
    try:
        layers: Sequence = [
            Layer(int(x["fan_in"]), int(x["neuron_count"]), str(x.get("activation", "relu"))) for x in d["layers"]
        ]
        return NetworkCostModel(
            float(d.get("mult_time", DEVICE_MULT_TIME)),
            float(d.get("add_time", DEVICE_ADD_TIME)),
            tuple(layers),
            d.get("mac_sig_figs"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed network description: {exc}") from None
