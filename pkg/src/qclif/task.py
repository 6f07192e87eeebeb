"""Synthetic context-gating task standing in for gesture recognition.

Stimulus channels are split into ``classes`` groups and neurons into
matching groups. A trial shows one stimulus class (its group fires at
``stim_rate_hz``, everything else at ``noise_rate_hz``) while one context
channel fires at ``context_rate_hz``. Hand-set weights let neuron group k
respond only when context k and stimulus k coincide, so the layer's total
spike count answers "does the stimulus match the context?".

The decision threshold is placed midway between the largest mismatched and
the smallest matched full-precision spike count, which makes the float
model 100% accurate on its own trials by construction.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import FloatLayerSpec, LayerParams, QclifLayer, run_float_layer
from .fixedpoint import int_range
from .quantize import DEFAULT_APICAL_RANGE, DEFAULT_SOMA_RANGE, QuantizationSpec, quantize_weight_set
from .stimgen import EventStream, concatenate, make_rng, poisson_raster


@dataclass(frozen=True)
class Trial:
    stimulus: EventStream
    context: EventStream
    stimulus_class: int
    context_class: int

    @property
    def label(self) -> int:
        return int(self.stimulus_class == self.context_class)


@dataclass(frozen=True)
class ContextTask:
    spec: FloatLayerSpec
    trials: list[Trial]
    decision_threshold: float
    classes: int

    @property
    def labels(self) -> np.ndarray:
        return np.array([t.label for t in self.trials], dtype=np.int64)

    def streams(self) -> tuple[EventStream, EventStream]:
        """All trials back to back: (stimulus, context)."""
        return (concatenate([t.stimulus for t in self.trials]),
                concatenate([t.context for t in self.trials]))


def synth_context_task(classes: int = 4, neurons_per_class: int = 5, channels_per_class: int = 16,
                       seed: int = 0, trials: int = 40, trial_cycles: int = 100,
                       stim_rate_hz: float = 100.0, noise_rate_hz: float = 10.0,
                       context_rate_hz: float = 200.0, dt_ms: float = 1.0,
                       on_weight: float = 0.12, off_weight: float = -0.1, weight_noise: float = 0.06,
                       alpha_leak: float = 0.14, beta_leak: float = 0.01, v_threshold: float = 1.0
                       ) -> ContextTask:
    if classes < 2:
        raise ValueError("need at least two classes")
    rng = make_rng(seed)
    n = classes * neurons_per_class
    s = classes * channels_per_class
    neuron_class = np.repeat(np.arange(classes), neurons_per_class)
    channel_class = np.repeat(np.arange(classes), channels_per_class)

    on_ctx = neuron_class[:, None] == np.arange(classes)[None, :]
    w_context = np.where(on_ctx, 1.0, -1.0) + rng.normal(0.0, 0.15, (n, classes))
    on_stim = neuron_class[:, None] == channel_class[None, :]
    w_soma = np.where(on_stim, on_weight, off_weight) + rng.normal(0.0, weight_noise, (n, s))
    w_recurrent = rng.normal(0.0, 0.03, (n, n))
    np.fill_diagonal(w_recurrent, 0.0)
    w_context = np.clip(w_context, *DEFAULT_APICAL_RANGE)
    w_soma = np.clip(w_soma, *DEFAULT_SOMA_RANGE)
    w_recurrent = np.clip(w_recurrent, *DEFAULT_SOMA_RANGE)
    spec = FloatLayerSpec(w_context, w_soma, w_recurrent, alpha_leak, beta_leak, v_threshold)

    out = []
    for i in range(trials):
        ctx_class = int(rng.integers(classes))
        stim_class = ctx_class if i % 2 == 0 else int((ctx_class + rng.integers(1, classes)) % classes)
        rates = np.where(channel_class == stim_class, stim_rate_hz, noise_rate_hz)
        stim = np.zeros((trial_cycles, s), dtype=bool)
        for rate in np.unique(rates):
            cols = np.flatnonzero(rates == rate)
            stim[:, cols] = poisson_raster(rate, dt_ms, cols.size, trial_cycles, rng)
        ctx = np.zeros((trial_cycles, classes), dtype=bool)
        ctx[:, ctx_class] = poisson_raster(context_rate_hz, dt_ms, 1, trial_cycles, rng)[:, 0]
        out.append(Trial(EventStream.from_raster(stim), EventStream.from_raster(ctx), stim_class, ctx_class))

    task = ContextTask(spec, out, 0.0, classes)
    counts = trial_counts(task, None)
    labels = task.labels
    lo, hi = counts[labels == 0].max(), counts[labels == 1].min()
    if not hi > lo:
        raise ValueError(f"task seed {seed} is not separable at full precision ({lo} >= {hi})")
    return ContextTask(spec, out, (lo + hi) / 2.0, classes)


# ---------------------------------------------------------------------------
# quantized evaluation


@dataclass(frozen=True)
class QuantizedModel:
    layer: QclifLayer
    soma_spec: QuantizationSpec
    apical_spec: QuantizationSpec


def _round_units(value: float, unit: Fraction, width: int) -> int:
    q = round(Fraction(value) / unit)
    return max(0, min(q, int_range(width)[1]))


def quantize_task_model(spec: FloatLayerSpec, bits: int, apical_width: int = 24,
                        somatic_width: int = 48) -> QuantizedModel:
    """Quantize weights to ``bits`` and express leaks/threshold in the resulting integer units.

    Apical potentials are in units of the apical weight scale, somatic
    potentials in units of (apical scale x soma scale).
    """
    soma_spec = QuantizationSpec.symmetric(bits, DEFAULT_SOMA_RANGE[1])
    apical_spec = QuantizationSpec.symmetric(bits, DEFAULT_APICAL_RANGE[1])
    weights = quantize_weight_set(spec.w_context, spec.w_soma, spec.w_recurrent, soma_spec, apical_spec)
    som_unit = apical_spec.scale * soma_spec.scale
    n = weights.neurons
    params = LayerParams(
        alpha_leak=np.full(n, _round_units(spec.alpha_leak, apical_spec.scale, apical_width), np.int64),
        beta_leak=np.full(n, _round_units(spec.beta_leak, som_unit, somatic_width), np.int64),
        v_threshold=np.full(n, _round_units(spec.v_threshold, som_unit, somatic_width), np.int64),
        apical_width=apical_width, somatic_width=somatic_width, weight_width=bits)
    return QuantizedModel(QclifLayer(weights, params), soma_spec, apical_spec)


def trial_counts(task: ContextTask, bits: int | None) -> np.ndarray:
    """Total output spikes per trial; ``bits=None`` runs the float model."""
    if bits is None:
        return np.array([run_float_layer(task.spec, t.context.to_raster(), t.stimulus.to_raster()).sum()
                         for t in task.trials])
    layer = quantize_task_model(task.spec, bits).layer
    return np.array([layer.run(t.context.to_raster(), t.stimulus.to_raster())[0].sum() for t in task.trials])


def task_accuracy(task: ContextTask, bits: int | None) -> float:
    predicted = trial_counts(task, bits) > task.decision_threshold
    return float(np.mean(predicted == task.labels.astype(bool)))
