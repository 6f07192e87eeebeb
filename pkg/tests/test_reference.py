import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qclif.errors import NonFiniteInput
from qclif.reference import (ClifParams, ClifState, clif_apical_step, clif_somatic_step, clif_trajectory,
                             compare_leak_models, tangent_matched_scale)

# max_t |linear - exp| / exp for t in 0..10, tau = 20, linear slope matched to the first
# exponential step; computed with mpmath at 40 digits: 0.155369581399465...
LEAK_APPROX_MAX_REL_ERROR = 0.15537


def test_apical_rest():
    assert clif_apical_step(ClifState(), ClifParams(), 0.0) == 0.0


def test_apical_one_step_decay():
    v = clif_apical_step(ClifState(v_apical=1.0), ClifParams(tau_a=20, dt=1), 0.0)
    assert v == pytest.approx(0.951229424500714, abs=1e-15)


def test_apical_steady_state():
    p = ClifParams(tau_a=20.0, r_m=1.5)
    state = ClifState()
    for _ in range(int(50 * p.tau_a)):
        state = ClifState(clif_apical_step(state, p, 0.8), 0.0, 0)
    assert abs(state.v_apical - 1.5 * 0.8) < 1e-9


@given(st.floats(-1e6, 1e6), st.floats(0.1, 1e3))
def test_apical_contraction(v, tau):
    p = ClifParams(tau_a=tau)
    assert abs(clif_apical_step(ClifState(v_apical=v), p, 0.0)) <= p.alpha * abs(v)


def test_somatic_rest():
    assert clif_somatic_step(ClifState(), ClifParams(), 0.0, 0.0) == (0.0, 0)


@given(st.floats(-1e3, 0.0), st.floats(-1e3, 1e3))
def test_relu_gate(v_ap, i_som):
    p = ClifParams(v_th=1e9)
    v, spike = clif_somatic_step(ClifState(v_somatic=0.0), p, i_som, v_ap)
    assert v == 0.0 and spike == 0


def test_subtract_vth_mode_drains():
    p = ClifParams(v_th=0.5, subtract_vth_mode=True)
    v, spike = clif_somatic_step(ClifState(v_somatic=0.2), p, 0.0, 0.0)
    assert v == pytest.approx(p.beta * 0.2 - 0.5) and spike == 0


def test_spike_and_reset():
    p = ClifParams(tau_m=2.0, v_th=1.0)
    v, spike = clif_somatic_step(ClifState(v_somatic=0.0), p, 10.0, 1.0)
    assert (v, spike) == (0.0, 1)


def test_non_finite():
    with pytest.raises(NonFiniteInput):
        clif_apical_step(ClifState(), ClifParams(), float("nan"))
    with pytest.raises(NonFiniteInput):
        clif_somatic_step(ClifState(), ClifParams(), float("inf"), 1.0)


def test_invalid_params():
    with pytest.raises(ValueError):
        ClifParams(tau_a=0)


def test_trajectory_matches_scripted_recurrence():
    rng = np.random.default_rng(11)
    p = ClifParams(tau_a=20, tau_m=200, r_m=1.0, v_th=0.6)
    ia = rng.normal(0.5, 1.0, 1000)
    isom = rng.normal(1.0, 2.0, 1000)
    got = clif_trajectory(p, ia, isom)

    a, b = math.exp(-1 / 20), math.exp(-1 / 200)
    va = vs = 0.0
    for t in range(1000):
        va = a * va + (1 - a) * ia[t]
        vs = b * vs + (1 - b) * isom[t] * max(va, 0.0)
        s = 1 if vs >= 0.6 else 0
        if s:
            vs = 0.0
        assert got[t, 0] == pytest.approx(va, rel=1e-12, abs=1e-300)
        assert got[t, 1] == pytest.approx(vs, rel=1e-12, abs=1e-300)
        assert got[t, 2] == s
    assert got[:, 2].sum() > 0


def test_leak_compare_zero_start():
    r = compare_leak_models(0.0, 20.0, 1, 10, 0.05)
    assert r.max_abs_error == 0.0 and r.max_rel_error == 0.0


def test_tangent_matched_divergence_grows_from_zero():
    v0, tau = 3.0, 20.0
    r = compare_leak_models(v0, tau, 1, 10, tangent_matched_scale(v0, tau))
    assert r.abs_error[0] == 0.0 and r.abs_error[1] == pytest.approx(0.0, abs=1e-15)
    assert np.all(np.diff(r.abs_error) >= -1e-15)


def test_leak_approximation_regression_bound():
    r = compare_leak_models(1.0, 20.0, 1, 10, tangent_matched_scale(1.0, 20.0))
    assert r.max_rel_error < LEAK_APPROX_MAX_REL_ERROR
    assert r.max_rel_error == pytest.approx(0.155369581399465, rel=1e-9)


@given(st.floats(0.01, 100.0), st.floats(0.01, 100.0))
def test_divergence_scales_linearly(v0, k):
    tau = 20.0
    scale = float(tangent_matched_scale(v0, tau))
    a = compare_leak_models(v0, tau, 1, 10, scale)
    b = compare_leak_models(v0 * k, tau, 1, 10, scale * k)
    np.testing.assert_allclose(b.abs_error, a.abs_error * k, rtol=1e-9, atol=1e-12 * v0 * k)
    np.testing.assert_allclose(b.rel_error, a.rel_error, rtol=1e-9, atol=1e-12)
