"""Integer qCLIF neuron and recurrent layer.

Per cycle, for neuron ``j``::

    ctx      = sum_i C[i] & Wc[j, i]
    drive    = sum_i S[i] & Ws[j, i] + sum_k P[k] & Wr[j, k]     (P = last cycle's output)
    ap'      = max(0, ap - alpha_leak + ctx)
    cand     = max(0, som - beta_leak + relu(ap') * drive)
    spike    = cand >= v_threshold
    som'     = 0 if spike else cand

Registers are signed two's complement: the apical register and the MU
operands are ``apical_width`` bits, the somatic register is
``somatic_width`` bits. Pre-floor values that do not fit raise
:class:`~qclif.errors.Overflow` (or clamp, under the ``"saturate"`` policy).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, Overflow
from .fixedpoint import MAX_WIDTH, MIN_WIDTH, check_fits, fits, int_range

OVERFLOW_POLICIES = ("error", "saturate")
DEFAULT_THRESHOLD = 64


def relu(x):
    return max(0, x)


# ---------------------------------------------------------------------------
# scalar operations (Python ints, exact)


def gate_weight(spike: int, weight: int) -> int:
    """AND-gate synapse: the full weight passes when the spike bit is set."""
    return weight if spike else 0


def synaptic_sum(spikes: Sequence[int], weights: Sequence[int]) -> int:
    if len(spikes) != len(weights):
        raise LengthMismatch(f"{len(spikes)} spikes vs {len(weights)} weights")
    return sum(gate_weight(s, int(w)) for s, w in zip(spikes, weights))


def somatic_input(stimulus_spikes, w_soma_row, prev_spikes, w_recurrent_row) -> int:
    return synaptic_sum(stimulus_spikes, w_soma_row) + synaptic_sum(prev_spikes, w_recurrent_row)


def _fit(value: int, width: int | None, what: str, policy: str) -> int:
    if width is None:
        return value
    if policy == "saturate":
        lo, hi = int_range(width)
        return min(max(value, lo), hi)
    return check_fits(value, width, what)


def apical_step(v_apical: int, alpha_leak: int, v_input_ap: int,
                width: int | None = None, policy: str = "error") -> int:
    candidate = _fit(v_apical - alpha_leak + v_input_ap, width, "apical accumulator", policy)
    return max(0, candidate)


def somatic_step(v_somatic: int, beta_leak: int, v_apical_new: int, v_input_som: int,
                 v_threshold: int, width: int | None = None,
                 policy: str = "error") -> tuple[int, int]:
    candidate = v_somatic - beta_leak + relu(v_apical_new) * v_input_som
    candidate = max(0, _fit(candidate, width, "somatic accumulator", policy))
    if candidate >= v_threshold:
        return 0, 1
    return candidate, 0


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class NeuronParams:
    alpha_leak: int
    beta_leak: int
    v_threshold: int = DEFAULT_THRESHOLD
    apical_width: int = 16
    somatic_width: int = 32
    weight_width: int = 8

    def __post_init__(self):
        for name in ("apical_width", "somatic_width", "weight_width"):
            w = getattr(self, name)
            if not MIN_WIDTH <= w <= MAX_WIDTH:
                raise ValueError(f"{name}={w} outside [{MIN_WIDTH}, {MAX_WIDTH}]")
        if self.somatic_width < 2 * self.apical_width:
            raise ValueError("somatic_width must hold the 2N-bit MU product "
                             f"({self.somatic_width} < 2*{self.apical_width})")
        for name in ("alpha_leak", "beta_leak", "v_threshold"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not fits(self.alpha_leak, self.apical_width):
            raise ValueError(f"alpha_leak={self.alpha_leak} not representable in apical_width")
        if not fits(self.beta_leak, self.somatic_width) or not fits(self.v_threshold, self.somatic_width):
            raise ValueError("beta_leak and v_threshold must be representable in somatic_width")


@dataclass(frozen=True)
class WeightSet:
    """Signed integer weight matrices, one row per neuron."""

    w_context: np.ndarray
    w_soma: np.ndarray
    w_recurrent: np.ndarray

    def __post_init__(self):
        for name in ("w_context", "w_soma", "w_recurrent"):
            m = np.asarray(getattr(self, name))
            if m.dtype != object:
                m = m.astype(np.int64)
            if m.ndim != 2:
                raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
            object.__setattr__(self, name, m)
        n = self.w_context.shape[0]
        if self.w_soma.shape[0] != n or self.w_recurrent.shape != (n, n):
            raise DimensionMismatch(
                f"inconsistent shapes: context {self.w_context.shape}, "
                f"soma {self.w_soma.shape}, recurrent {self.w_recurrent.shape}")

    @property
    def neurons(self) -> int:
        return self.w_context.shape[0]

    @property
    def context_inputs(self) -> int:
        return self.w_context.shape[1]

    @property
    def stimulus_inputs(self) -> int:
        return self.w_soma.shape[1]

    @property
    def synapse_count(self) -> int:
        return self.neurons * (self.context_inputs + self.stimulus_inputs + self.neurons)

    def check_width(self, weight_width: int) -> None:
        lo, hi = int_range(weight_width)
        for name in ("w_context", "w_soma", "w_recurrent"):
            m = getattr(self, name)
            if m.size and (m.min() < lo or m.max() > hi):
                raise Overflow(f"{name} has entries outside {weight_width}-bit signed range")

    @classmethod
    def zeros(cls, neurons: int, context_inputs: int, stimulus_inputs: int) -> "WeightSet":
        return cls(np.zeros((neurons, context_inputs), np.int64),
                   np.zeros((neurons, stimulus_inputs), np.int64),
                   np.zeros((neurons, neurons), np.int64))


@dataclass(frozen=True)
class LayerState:
    v_apical: np.ndarray
    v_somatic: np.ndarray
    prev_spikes: np.ndarray
    cycle: int = 0

    @classmethod
    def zeros(cls, neurons: int, dtype=np.int64) -> "LayerState":
        return cls(np.zeros(neurons, dtype), np.zeros(neurons, dtype), np.zeros(neurons, bool), 0)

    def __eq__(self, other):
        if not isinstance(other, LayerState):
            return NotImplemented
        return (self.cycle == other.cycle
                and np.array_equal(self.v_apical, other.v_apical)
                and np.array_equal(self.v_somatic, other.v_somatic)
                and np.array_equal(self.prev_spikes, other.prev_spikes))


@dataclass(frozen=True)
class LayerParams:
    """Per-neuron leaks/thresholds with layer-wide register widths."""

    alpha_leak: np.ndarray
    beta_leak: np.ndarray
    v_threshold: np.ndarray
    apical_width: int = 16
    somatic_width: int = 32
    weight_width: int = 8
    overflow: str = "error"

    def __post_init__(self):
        if self.overflow not in OVERFLOW_POLICIES:
            raise ValueError(f"overflow policy must be one of {OVERFLOW_POLICIES}")

    @classmethod
    def build(cls, params: NeuronParams | Sequence[NeuronParams], neurons: int,
              overflow: str = "error") -> "LayerParams":
        if isinstance(params, NeuronParams):
            params = [params] * neurons
        params = list(params)
        if len(params) != neurons:
            raise DimensionMismatch(f"{len(params)} NeuronParams for {neurons} neurons")
        widths = {(p.apical_width, p.somatic_width, p.weight_width) for p in params}
        if len(widths) != 1:
            raise ValueError("register widths must be uniform across a layer")
        (apical_width, somatic_width, weight_width), = widths
        return cls(np.array([p.alpha_leak for p in params], np.int64),
                   np.array([p.beta_leak for p in params], np.int64),
                   np.array([p.v_threshold for p in params], np.int64),
                   apical_width, somatic_width, weight_width, overflow)

    def neuron(self, j: int) -> NeuronParams:
        return NeuronParams(int(self.alpha_leak[j]), int(self.beta_leak[j]), int(self.v_threshold[j]),
                            self.apical_width, self.somatic_width, self.weight_width)


# ---------------------------------------------------------------------------
# vectorised layer


def _check_or_clip(x: np.ndarray, width: int, what: str, policy: str) -> np.ndarray:
    lo, hi = int_range(width)
    if policy == "saturate":
        return np.minimum(np.maximum(x, lo), hi)
    if x.size and (x.min() < lo or x.max() > hi):
        j = int(np.flatnonzero((x < lo) | (x > hi))[0])
        raise Overflow(f"{what} of neuron {j} = {x[j]} does not fit {width}-bit signed")
    return x


def _as_spikes(v, length: int, what: str) -> np.ndarray:
    v = np.asarray(v)
    if v.shape != (length,):
        raise DimensionMismatch(f"{what} has shape {v.shape}, expected ({length},)")
    return v.astype(bool)


class QclifLayer:
    """A recurrent layer with fixed weights and parameters.

    ``step`` is pure: it returns a new :class:`LayerState` and never mutates
    its input.
    """

    def __init__(self, weights: WeightSet, params: NeuronParams | Sequence[NeuronParams] | LayerParams,
                 overflow: str = "error"):
        n = weights.neurons
        if not isinstance(params, LayerParams):
            params = LayerParams.build(params, n, overflow)
        if params.alpha_leak.shape != (n,):
            raise DimensionMismatch(f"params sized for {params.alpha_leak.shape[0]} neurons, weights for {n}")
        weights.check_width(params.weight_width)
        self.weights = weights
        self.params = params
        self.dtype = _pick_dtype(weights, params)
        cast = (lambda m: m.astype(object)) if self.dtype == object else (lambda m: m.astype(np.int64))
        self._wc = cast(weights.w_context)
        self._ws = cast(weights.w_soma)
        self._wr = cast(weights.w_recurrent)
        self._alpha = cast(params.alpha_leak)
        self._beta = cast(params.beta_leak)
        self._vth = cast(params.v_threshold)

    @property
    def neurons(self) -> int:
        return self.weights.neurons

    def initial_state(self) -> LayerState:
        return LayerState.zeros(self.neurons, self.dtype)

    def step(self, state: LayerState, context_spikes, stimulus_spikes) -> tuple[LayerState, np.ndarray]:
        p = self.params
        c = _as_spikes(context_spikes, self._wc.shape[1], "context_spikes")
        s = _as_spikes(stimulus_spikes, self._ws.shape[1], "stimulus_spikes")
        prev = _as_spikes(state.prev_spikes, self.neurons, "prev_spikes")
        if state.v_apical.shape != (self.neurons,) or state.v_somatic.shape != (self.neurons,):
            raise DimensionMismatch("state does not match layer size")

        ctx = self._wc[:, c].sum(axis=1)
        drive = self._ws[:, s].sum(axis=1) + self._wr[:, prev].sum(axis=1)

        ap = _check_or_clip(state.v_apical - self._alpha + ctx, p.apical_width, "apical accumulator", p.overflow)
        ap = np.maximum(ap, 0)
        drive = _check_or_clip(drive, p.apical_width, "somatic drive", p.overflow)
        cand = state.v_somatic - self._beta + np.maximum(ap, 0) * drive
        cand = np.maximum(_check_or_clip(cand, p.somatic_width, "somatic accumulator", p.overflow), 0)
        spikes = cand >= self._vth
        som = np.where(spikes, 0, cand)
        if self.dtype == object:
            som = som.astype(object)
        return LayerState(ap, som, spikes, state.cycle + 1), spikes

    def run(self, context_raster, stimulus_raster, state: LayerState | None = None
            ) -> tuple[np.ndarray, LayerState]:
        """Iterate ``step`` over [cycles x channels] rasters; returns a [cycles x neurons] bool raster."""
        context_raster = np.asarray(context_raster, bool)
        stimulus_raster = np.asarray(stimulus_raster, bool)
        if context_raster.shape[0] != stimulus_raster.shape[0]:
            raise DimensionMismatch("context and stimulus rasters differ in length")
        state = self.initial_state() if state is None else state
        out = np.zeros((context_raster.shape[0], self.neurons), bool)
        for t in range(context_raster.shape[0]):
            state, out[t] = self.step(state, context_raster[t], stimulus_raster[t])
        return out, state


def _pick_dtype(weights: WeightSet, params: LayerParams):
    fan_in = max(weights.context_inputs, weights.stimulus_inputs + weights.neurons, 1)
    worst_sum = fan_in << (params.weight_width - 1)
    worst_product = 1 << (2 * params.apical_width)
    worst = max(worst_sum, worst_product, 1 << params.somatic_width) * 4
    return np.int64 if worst < (1 << 62) else object


def layer_step(state: LayerState, weights: WeightSet, params, context_spikes, stimulus_spikes,
               overflow: str = "error") -> tuple[LayerState, np.ndarray]:
    """One cycle of the layer; convenience wrapper around :class:`QclifLayer`."""
    return QclifLayer(weights, params, overflow).step(state, context_spikes, stimulus_spikes)


# ---------------------------------------------------------------------------
# float pathway (same linear-leak equations, no register widths)


@dataclass(frozen=True)
class FloatLayerSpec:
    w_context: np.ndarray
    w_soma: np.ndarray
    w_recurrent: np.ndarray
    alpha_leak: float
    beta_leak: float
    v_threshold: float


def run_float_layer(spec: FloatLayerSpec, context_raster, stimulus_raster) -> np.ndarray:
    """Full-precision run of the linear-leak model; the baseline row of a quantization sweep."""
    context_raster = np.asarray(context_raster, np.float64)
    stimulus_raster = np.asarray(stimulus_raster, np.float64)
    n = spec.w_context.shape[0]
    ap = np.zeros(n)
    som = np.zeros(n)
    prev = np.zeros(n)
    out = np.zeros((context_raster.shape[0], n), bool)
    for t in range(context_raster.shape[0]):
        ap = np.maximum(ap - spec.alpha_leak + spec.w_context @ context_raster[t], 0.0)
        drive = spec.w_soma @ stimulus_raster[t] + spec.w_recurrent @ prev
        cand = np.maximum(som - spec.beta_leak + ap * drive, 0.0)
        spikes = cand >= spec.v_threshold
        som = np.where(spikes, 0.0, cand)
        prev = spikes.astype(np.float64)
        out[t] = spikes
    return out
