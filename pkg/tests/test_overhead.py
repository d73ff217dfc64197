from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from actdesync.errors import ConfigError, DataError, DegenerateModelError
from actdesync.overhead import (
    DEVICE_ADD_TIME,
    DEVICE_MULT_TIME,
    REFERENCE_ACTIVATION_RANGE,
    REFERENCE_PROTECTED_RANGE,
    Layer,
    NetworkCostModel,
    model_from_dict,
    neuron_time_range,
    overhead_report,
    round_sig,
    vgg19_classifier,
)


def single(fan_in, sig=None, mult=DEVICE_MULT_TIME, add=DEVICE_ADD_TIME):
    return NetworkCostModel(mult, add, (Layer(fan_in, 1),), mac_sig_figs=sig)


def exact_overhead(fan_in, mult, add, base, prot):
    # rational reference for the aligned percentages
    mac = fan_in * (Fraction(mult) + Fraction(add))
    b = [mac + Fraction(v) for v in base]
    p = [mac + Fraction(v) for v in prot]
    return tuple(float(100 * (p[i] - b[i]) / b[i]) for i in range(2))


class TestReferenceScenario:
    def test_ranges(self):
        r = overhead_report(vgg19_classifier(), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE)
        assert round_sig(r.baseline_range[0], 4) == 0.09002
        assert round_sig(r.baseline_range[1], 4) == 0.0906
        assert round_sig(r.protected_range[0], 2) == 0.093
        assert round_sig(r.protected_range[1], 1) == 0.1
        lo, hi = r.overhead_range
        assert 2.1 <= lo <= hi <= 11.5

    def test_extreme_pairing(self):
        r = overhead_report(vgg19_classifier(), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE)
        lo, hi = r.layers[0].extreme_overhead_range
        assert lo == pytest.approx(2.6, abs=0.5) and hi == pytest.approx(11.0, abs=0.5)
        assert lo <= r.overhead_range[0] and r.overhead_range[1] <= hi

    def test_layer_totals(self):
        r = overhead_report(vgg19_classifier(), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE)
        lay = r.layers[0]
        assert lay.layer_baseline_range == pytest.approx(tuple(1000 * v for v in lay.baseline_range))
        assert lay.layer_protected_range == pytest.approx(tuple(1000 * v for v in lay.protected_range))

    def test_unrounded_model(self):
        r = overhead_report(vgg19_classifier(None), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE)
        assert r.baseline_range[0] == pytest.approx(4096 * (DEVICE_MULT_TIME + DEVICE_ADD_TIME) + 2.1e-5, rel=1e-12)
        assert 2.1 <= r.overhead_range[0] <= r.overhead_range[1] <= 11.5

    def test_note(self):
        assert "memory" in overhead_report(vgg19_classifier(), (1e-5, 2e-5), (1e-3, 2e-3)).note


class TestArithmetic:
    def test_fan_in_one(self):
        lo, hi = neuron_time_range(single(1), 0, (2e-5, 6e-4))
        assert lo == DEVICE_MULT_TIME + DEVICE_ADD_TIME + 2e-5
        assert hi == DEVICE_MULT_TIME + DEVICE_ADD_TIME + 6e-4

    def test_no_delay_no_overhead(self):
        r = overhead_report(single(4096), (2e-5, 6e-4), (2e-5, 6e-4))
        assert r.overhead_range == (0.0, 0.0)

    def test_smaller_fan_in_costs_more(self):
        big = overhead_report(single(4096), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE).overhead_range
        small = overhead_report(single(1000), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE).overhead_range
        assert small[0] > big[0] and small[1] > big[1]

    def test_huge_fan_in_negligible(self):
        r = overhead_report(single(10**6), REFERENCE_ACTIVATION_RANGE, REFERENCE_PROTECTED_RANGE)
        assert 0 < r.overhead_range[1] < 0.5

    def test_oracle_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            fan_in = int(rng.integers(1, 20000))
            mult, add = rng.uniform(1e-7, 1e-4, 2)
            base = np.sort(rng.uniform(1e-6, 1e-3, 2))
            prot = base + np.sort(rng.uniform(0, 1e-2, 2))
            prot = np.sort(prot)
            r = overhead_report(single(fan_in, mult=mult, add=add), base, prot)
            ref = exact_overhead(fan_in, mult, add, base, prot)
            assert r.overhead_range == pytest.approx(ref, rel=1e-12, abs=1e-12)

    @given(st.integers(1, 10**5), st.integers(1, 10**5), st.floats(0, 1e-2))
    def test_monotone_in_fan_in(self, a, b, delay):
        small, large = sorted((a, b))
        base = (2e-5, 6e-4)
        prot = (base[0] + delay, base[1] + delay)
        o_small = overhead_report(single(small), base, prot).overhead_range[0]
        o_large = overhead_report(single(large), base, prot).overhead_range[0]
        assert o_small >= o_large >= 0

    @given(st.floats(0, 1e-2), st.floats(0, 1e-2))
    def test_monotone_in_delay(self, d1, d2):
        lo, hi = sorted((d1, d2))
        base = (2e-5, 6e-4)
        a = overhead_report(single(4096), base, (base[0] + lo, base[1] + lo)).overhead_range
        b = overhead_report(single(4096), base, (base[0] + hi, base[1] + hi)).overhead_range
        assert a[0] <= b[0] and a[1] <= b[1]


class TestErrors:
    def test_degenerate_baseline(self):
        with pytest.raises(DegenerateModelError):
            overhead_report(single(1, mult=1e-9, add=1e-9), (-1e-3, 1e-3), (1e-3, 2e-3))

    def test_inverted_range(self):
        with pytest.raises(DataError):
            neuron_time_range(single(1), 0, (2e-4, 1e-4))

    def test_bad_layer_index(self):
        with pytest.raises(ConfigError):
            neuron_time_range(single(1), 3, (1e-4, 2e-4))

    @pytest.mark.parametrize("kw", [{"fan_in": 0, "neuron_count": 1}, {"fan_in": 1, "neuron_count": 0}])
    def test_bad_layer(self, kw):
        with pytest.raises(ConfigError):
            Layer(**kw)

    def test_bad_costs(self):
        with pytest.raises(ConfigError):
            NetworkCostModel(0.0, 1e-5, (Layer(1, 1),))
        with pytest.raises(ConfigError):
            NetworkCostModel(1e-5, 1e-5, ())


class TestNetworkDescription:
    def test_from_dict(self):
        m = model_from_dict({"layers": [{"fan_in": 784, "neuron_count": 128, "activation": "tanh"}, {"fan_in": 128, "neuron_count": 10}]})
        assert m.mult_time == DEVICE_MULT_TIME and len(m.layers) == 2
        assert m.layers[1].activation == "relu"

    def test_per_activation_ranges(self):
        m = model_from_dict({"layers": [{"fan_in": 10, "neuron_count": 4, "activation": "tanh"}, {"fan_in": 4, "neuron_count": 2, "activation": "relu"}]})
        r = overhead_report(m, {"tanh": (4e-4, 6e-4), "*": (2e-5, 2.1e-5)}, {"*": (3e-3, 1e-2)})
        assert r.layers[0].baseline_range[0] == pytest.approx(10 * (DEVICE_MULT_TIME + DEVICE_ADD_TIME) + 4e-4)
        assert r.layers[1].baseline_range[0] == pytest.approx(4 * (DEVICE_MULT_TIME + DEVICE_ADD_TIME) + 2e-5)

    def test_missing_range(self):
        m = model_from_dict({"layers": [{"fan_in": 10, "neuron_count": 4, "activation": "tanh"}]})
        with pytest.raises(ConfigError):
            overhead_report(m, {"relu": (1e-5, 2e-5)}, (1e-3, 2e-3))

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            model_from_dict({"layers": [{"fan_in": 1, "neuron_count": 1}], "bandwidth": 3})

    def test_malformed(self):
        with pytest.raises(ConfigError):
            model_from_dict({"layers": [{"neuron_count": 1}]})


class TestRoundSig:
    @pytest.mark.parametrize("x,d,expected", [(0.0937574, 1, 0.09), (0.0937574, 2, 0.094), (0.0906, 4, 0.0906), (0.0, 3, 0.0)])
    def test_values(self, x, d, expected):
        assert round_sig(x, d) == expected
