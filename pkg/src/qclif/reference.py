"""Floating-point two-compartment CLIF neuron with exponential leaks.

Used as a baseline for the integer model and to measure how far a linear
leak drifts from the exponential one it replaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import NonFiniteInput


@dataclass(frozen=True)
class ClifParams:
    tau_a: float = 20.0
    tau_m: float = 200.0
    r_m: float = 1.0
    v_th: float = 1.0
    dt: float = 1.0
    # subtract v_th inside the somatic update on every step (literal reading)
    subtract_vth_mode: bool = False

    def __post_init__(self):
        if not (self.tau_a > 0 and self.tau_m > 0 and self.dt > 0):
            raise ValueError("tau_a, tau_m and dt must be positive")

    @property
    def alpha(self) -> float:
        return math.exp(-self.dt / self.tau_a)

    @property
    def beta(self) -> float:
        return math.exp(-self.dt / self.tau_m)


@dataclass(frozen=True)
class ClifState:
    v_apical: float = 0.0
    v_somatic: float = 0.0
    last_spike: int = 0


def _finite(*xs):
    for x in xs:
        if not math.isfinite(x):
            raise NonFiniteInput(f"non-finite input {x!r}")


def clif_apical_step(state: ClifState, params: ClifParams, i_apical: float) -> float:
    _finite(state.v_apical, i_apical)
    a = params.alpha
    return a * state.v_apical + (1.0 - a) * params.r_m * i_apical


def clif_somatic_step(state: ClifState, params: ClifParams, i_somatic: float,
                      v_apical_new: float) -> tuple[float, int]:
    """Returns the post-reset somatic potential and the spike bit."""
    _finite(state.v_somatic, i_somatic, v_apical_new)
    b = params.beta
    v = b * state.v_somatic + (1.0 - b) * (params.r_m * i_somatic * max(0.0, v_apical_new))
    if params.subtract_vth_mode:
        v -= params.v_th
    if v >= params.v_th:
        return 0.0, 1
    return v, 0


def clif_step(state: ClifState, params: ClifParams, i_apical: float, i_somatic: float) -> ClifState:
    ap = clif_apical_step(state, params, i_apical)
    som, spike = clif_somatic_step(state, params, i_somatic, ap)
    return ClifState(ap, som, spike)


def clif_trajectory(params: ClifParams, i_apical, i_somatic, state: ClifState | None = None) -> np.ndarray:
    """Run a neuron over input sequences; rows are (v_apical, v_somatic, spike)."""
    state = state or ClifState()
    out = np.zeros((len(i_apical), 3))
    for t, (ia, isom) in enumerate(zip(i_apical, i_somatic)):
        state = clif_step(state, params, float(ia), float(isom))
        out[t] = state.v_apical, state.v_somatic, state.last_spike
    return out


@dataclass(frozen=True)
class DivergenceReport:
    exponential: np.ndarray
    linear: np.ndarray
    abs_error: np.ndarray
    rel_error: np.ndarray

    @property
    def max_abs_error(self) -> float:
        return float(self.abs_error.max())

    @property
    def max_rel_error(self) -> float:
        return float(self.rel_error.max())


def tangent_matched_scale(v0: float, tau: float, leak: int = 1) -> Fraction:
    """Scale making ``leak * scale`` equal the first exponential step ``v0 (1 - exp(-1/tau))``."""
    return Fraction(v0 * -math.expm1(-1.0 / tau)) / leak


def compare_leak_models(v0: float, tau: float, leak: int, steps: int, scale) -> DivergenceReport:
    """Exponential decay ``v0 exp(-t/tau)`` against floored linear decay ``max(0, v0 - t leak scale)``.

    Both curves are sampled at t = 0..steps. Relative error is taken against
    the exponential curve (0 where that curve is 0).
    """
    if v0 < 0 or steps < 1:
        raise ValueError("need v0 >= 0 and steps >= 1")
    t = np.arange(steps + 1, dtype=np.float64)
    expo = v0 * np.exp(-t / tau)
    lin = np.maximum(0.0, v0 - t * leak * float(scale))
    abs_err = np.abs(lin - expo)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(expo > 0, abs_err / np.where(expo > 0, expo, 1.0), 0.0)
    return DivergenceReport(expo, lin, abs_err, rel)
