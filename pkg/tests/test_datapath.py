import csv
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qclif.core import NeuronParams, QclifLayer, WeightSet
from qclif.datapath import BLOCKS, DatapathConfig, mu_multiply, run_datapath, swm_reduce, swm_stages
from qclif.errors import FanInExceeded, Overflow
from qclif.fixedpoint import required_accumulator_width


def _smallest_power_of_three_exponent(n):
    k = 0
    while 3 ** k < n:
        k += 1
    return k


def test_stage_count_examples():
    assert swm_stages(27) == 3
    assert swm_stages(1) == 0
    assert swm_stages(500) == 6


def test_stage_count_rule_up_to_2000():
    for n in range(1, 2001):
        assert swm_stages(n) == _smallest_power_of_three_exponent(n), n


def _cfg(**kw):
    base = dict(fan_in_context=4, fan_in_stimulus=500, neuron_count=1)
    base.update(kw)
    return DatapathConfig(**base)


def test_swm_single_term_identity():
    assert swm_reduce([-77], _cfg()) == (-77, 0)


def test_swm_empty():
    assert swm_reduce([], _cfg()) == (0, 0)


def test_swm_500_random_terms():
    rng = random.Random(500)
    terms = [rng.randint(-128, 127) for _ in range(500)]
    total, stages = swm_reduce(terms, _cfg())
    assert total == sum(terms)
    assert stages == 6


@given(st.lists(st.integers(-128, 127), max_size=501))
def test_swm_value_preserving(terms):
    total, stages = swm_reduce(terms, _cfg())
    assert total == sum(terms)
    assert stages == _smallest_power_of_three_exponent(max(len(terms), 1))


def test_swm_fan_in_exceeded():
    with pytest.raises(FanInExceeded):
        swm_reduce([1] * 502, _cfg())


def test_swm_undersized_accumulator():
    cfg = _cfg(weight_width=9, accumulator_width=16, fan_in_stimulus=499)
    with pytest.raises(Overflow):
        swm_reduce([255] * 500, cfg)
    ok = _cfg(weight_width=9, accumulator_width=required_accumulator_width(500, 255, True).required_width)
    assert swm_reduce([255] * 500, ok) == (127_500, 6)


def test_default_accumulator_is_sized_for_fan_in():
    cfg = _cfg(weight_width=8)
    assert cfg.accumulator_width == required_accumulator_width(501, 128, signed=True).required_width
    assert cfg.product_width == 2 * cfg.apical_width


def test_mu_multiply():
    assert mu_multiply(0, -99, 8) == 0
    assert mu_multiply(127, 127, 8) == 127 * 127
    assert mu_multiply(-128, -128, 8) == 16384
    rng = random.Random(8)
    for _ in range(1000):
        a, b = rng.randint(-128, 127), rng.randint(-128, 127)
        assert mu_multiply(a, b, 8) == a * b
    with pytest.raises(Overflow):
        mu_multiply(128, 1, 8)


def _layer_case(rng, n, c, s, width=8):
    lo, hi = -(1 << (width - 1)), 1 << (width - 1)
    w = WeightSet(rng.integers(lo // 2, hi, (n, c)), rng.integers(lo, hi, (n, s)), rng.integers(lo, hi, (n, n)))
    params = [NeuronParams(int(rng.integers(0, 8)), int(rng.integers(0, 300)), int(rng.integers(1, 4000)),
                           24, 48, width) for _ in range(n)]
    return w, params


def test_quiescent_datapath():
    rng = np.random.default_rng(0)
    w, params = _layer_case(rng, 3, 2, 4)
    params = [NeuronParams(0, 0, 1, 24, 48, 8)] * 3
    cfg = DatapathConfig.for_layer(w, params[0])
    raster, trace = run_datapath(cfg, w, params, np.zeros((25, 2)), np.zeros((25, 4)))
    assert not raster.any()
    assert trace.cycles == 25
    for b in BLOCKS:
        assert not trace.array(b).any()


def test_always_fire_cross_mode():
    w = WeightSet(np.array([[1]]), np.array([[64]]), np.array([[0]]))
    p = NeuronParams(0, 0, 64)
    ones = np.ones((30, 1))
    raster, _ = run_datapath(DatapathConfig.for_layer(w, p), w, p, ones, ones)
    functional, _ = QclifLayer(w, p).run(ones, ones)
    assert raster.all() and np.array_equal(raster, functional)


def test_table_sized_layer_matches_functional():
    # 10 neurons x (5 context + 10 stimulus + 10 recurrent) = 250 synapses, 8-bit weights
    rng = np.random.default_rng(250)
    w, params = _layer_case(rng, 10, 5, 10)
    assert w.synapse_count == 250
    ctx = rng.random((1000, 5)) < 0.2
    stim = rng.random((1000, 10)) < 0.3
    raster, trace = run_datapath(DatapathConfig.for_layer(w, params[0]), w, params, ctx, stim)
    functional, _ = QclifLayer(w, params).run(ctx, stim)
    assert raster.any()
    assert np.array_equal(raster, functional)
    assert trace.cycles == 1000
    assert trace.stages_somatic == swm_stages(20) and trace.stages_context == swm_stages(5)
    assert trace.latency == swm_stages(20) + 4


def test_trace_matches_functional_state():
    rng = np.random.default_rng(4)
    w, params = _layer_case(rng, 4, 3, 6)
    ctx, stim = rng.random((50, 3)) < 0.4, rng.random((50, 6)) < 0.4
    _, trace = run_datapath(DatapathConfig.for_layer(w, params[0]), w, params, ctx, stim)
    layer = QclifLayer(w, params)
    state = layer.initial_state()
    for t in range(50):
        state, _ = layer.step(state, ctx[t], stim[t])
        assert np.array_equal(trace.array("aa")[t], state.v_apical)
        assert np.array_equal(trace.array("sa")[t], state.v_somatic)


def test_trace_csv(tmp_path):
    rng = np.random.default_rng(1)
    w, params = _layer_case(rng, 2, 2, 3)
    _, trace = run_datapath(DatapathConfig.for_layer(w, params[0]), w, params,
                            rng.random((5, 2)) < 0.5, rng.random((5, 3)) < 0.5)
    path = tmp_path / "trace.csv"
    trace.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["cycle", "neuron", "block", "value"]
    assert len(rows) == 1 + 5 * 2 * len(BLOCKS)
    assert rows[1][:3] == ["0", "0", "swm_context"]


def test_undersized_apical_raises_in_both_modes():
    w = WeightSet(np.array([[127, 127]]), np.array([[1]]), np.array([[0]]))
    p = NeuronParams(0, 0, 64, apical_width=10, somatic_width=20)
    ones = np.ones((10, 2))
    with pytest.raises(Overflow):
        run_datapath(DatapathConfig.for_layer(w, p), w, p, ones, np.zeros((10, 1)))
    with pytest.raises(Overflow):
        QclifLayer(w, p).run(ones, np.zeros((10, 1)))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_mode_equivalence_property(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 8))
    c, s = int(rng.integers(0, 5)), int(rng.integers(1, 20))
    w, params = _layer_case(rng, n, c, s, int(rng.choice([4, 8])))
    T = 60
    ctx, stim = rng.random((T, c)) < 0.3, rng.random((T, s)) < 0.3
    raster, _ = run_datapath(DatapathConfig.for_layer(w, params[0]), w, params, ctx, stim, record_trace=False)
    functional, _ = QclifLayer(w, params).run(ctx, stim)
    assert np.array_equal(raster, functional)
