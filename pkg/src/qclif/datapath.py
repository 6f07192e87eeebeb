"""Cycle/bit-level model of the qCLIF digital neuron.

Blocks, in order of evaluation within one clock cycle:

* SWM: AND-gates each input spike with its M-bit weight and reduces the
  gated terms with a tree of 3-input carry-save stages (``ceil(log3 n)`` deep).
* AC: leakage subtractor (LS) then apical accumulator (AA); the register is
  cleared whenever its sign bit is set.
* MU: N x N -> 2N-bit signed multiply of the apical output by the somatic drive.
* SC: somatic leakage subtractor (SLS) and accumulator (SA), sign-bit clear.
* TC: threshold compare; the spike drives RESET on SA and is latched as the
  recurrent input for the next cycle.

Pipeline depth is recorded in the trace but not exposed at the spike level:
one simulated cycle is one functional timestep.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import LayerParams, NeuronParams, WeightSet
from .errors import DimensionMismatch, FanInExceeded, Overflow
from .fixedpoint import check_fits, int_range, required_accumulator_width

BLOCKS = ("swm_context", "swm_somatic", "aa", "mu", "sa", "tc")
# AC, MU, SC, TC registers behind the SWM tree
POST_SWM_STAGES = 4


def swm_stages(terms: int) -> int:
    """Depth of the 3-input reduction tree: smallest k with 3**k >= terms."""
    k, n = 0, max(terms, 1)
    while n > 1:
        n = -(-n // 3)
        k += 1
    return k


@dataclass(frozen=True)
class DatapathConfig:
    fan_in_context: int
    fan_in_stimulus: int
    neuron_count: int
    weight_width: int = 8
    apical_width: int = 16
    somatic_width: int = 32
    accumulator_width: int | None = None
    overflow: str = "error"

    def __post_init__(self):
        if min(self.fan_in_context, self.fan_in_stimulus, self.neuron_count) < 0 or self.neuron_count < 1:
            raise ValueError("fan-ins must be >= 0 and neuron_count >= 1")
        if self.somatic_width < self.product_width:
            raise ValueError("somatic accumulator narrower than the 2N-bit MU product")
        if self.accumulator_width is None:
            bound = 1 << (self.weight_width - 1)
            width = required_accumulator_width(max(self.max_fan_in, 1), bound, signed=True).required_width
            object.__setattr__(self, "accumulator_width", width)

    @property
    def product_width(self) -> int:
        return 2 * self.apical_width

    @property
    def fan_in_somatic(self) -> int:
        """Somatic SWM terms: external stimulus plus recurrent feedback."""
        return self.fan_in_stimulus + self.neuron_count

    @property
    def max_fan_in(self) -> int:
        return max(self.fan_in_context, self.fan_in_somatic)

    @property
    def swm_depth(self) -> int:
        return swm_stages(self.max_fan_in)

    @property
    def latency(self) -> int:
        return self.swm_depth + POST_SWM_STAGES

    @classmethod
    def for_layer(cls, weights: WeightSet, params: NeuronParams | LayerParams, **kw) -> "DatapathConfig":
        return cls(weights.context_inputs, weights.stimulus_inputs, weights.neurons,
                   params.weight_width, params.apical_width, params.somatic_width, **kw)


def _csa_tree(terms: np.ndarray, acc_width: int, overflow: str) -> tuple[np.ndarray, int]:
    """Reduce each row of ``terms`` with 3-input carry-save stages.

    Each stage compresses three operands into a sum word and a carry word
    (``a ^ b ^ c`` and ``maj(a, b, c) << 1``) and resolves them into one
    partial sum held in an ``acc_width``-bit register.
    """
    rows = terms.shape[0]
    stages = 0
    lo, hi = int_range(acc_width)
    while terms.shape[1] > 1:
        pad = -terms.shape[1] % 3
        if pad:
            terms = np.concatenate([terms, np.zeros((rows, pad), terms.dtype)], axis=1)
        a, b, c = terms[:, 0::3], terms[:, 1::3], terms[:, 2::3]
        sum_word = a ^ b ^ c
        carry_word = ((a & b) | (a & c) | (b & c)) << 1
        terms = sum_word + carry_word
        stages += 1
        if overflow == "saturate":
            terms = np.clip(terms, lo, hi)
        elif terms.size and (terms.min() < lo or terms.max() > hi):
            raise Overflow(f"SWM partial sum exceeds {acc_width}-bit accumulator at stage {stages}")
    if terms.shape[1] == 0:
        return np.zeros(rows, terms.dtype), 0
    return terms[:, 0], stages


def swm_reduce(gated_weights, config: DatapathConfig) -> tuple[int, int]:
    """Sum one list of gated weights through the SWM tree; returns (sum, stages_used)."""
    gated = [int(w) for w in gated_weights]
    if len(gated) > config.max_fan_in:
        raise FanInExceeded(f"{len(gated)} terms exceed configured fan-in {config.max_fan_in}")
    for w in gated:
        check_fits(w, config.accumulator_width, "SWM input")
    row = np.array([gated], dtype=object).reshape(1, len(gated))
    total, stages = _csa_tree(row, config.accumulator_width, config.overflow)
    return int(total[0]), stages


def mu_multiply(apical_out: int, somatic_drive: int, width: int) -> int:
    """Signed N x N array multiply; the 2N-bit result range always holds the product."""
    check_fits(apical_out, width, "MU apical operand")
    check_fits(somatic_drive, width, "MU somatic operand")
    return check_fits(apical_out * somatic_drive, 2 * width, "MU product")


def _sign_bit(x: np.ndarray, width: int) -> np.ndarray:
    return ((x & ((1 << width) - 1)) >> (width - 1)).astype(bool)


@dataclass
class PipelineTrace:
    """Per-cycle register contents, one [cycles x neurons] array per block."""

    config: DatapathConfig
    blocks: dict[str, list] = field(default_factory=lambda: {b: [] for b in BLOCKS})
    stages_context: int = 0
    stages_somatic: int = 0

    @property
    def cycles(self) -> int:
        return len(self.blocks["tc"])

    @property
    def latency(self) -> int:
        return max(self.stages_context, self.stages_somatic) + POST_SWM_STAGES

    def array(self, block: str) -> np.ndarray:
        rows = self.blocks[block]
        if not rows:
            return np.zeros((0, self.config.neuron_count), np.int64)
        return np.stack(rows)

    def rows(self):
        for t in range(self.cycles):
            for j in range(self.config.neuron_count):
                for b in BLOCKS:
                    yield t, j, b, int(self.blocks[b][t][j])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cycle", "neuron", "block", "value"])
            w.writerows(self.rows())


def _pick_dtype(cfg: DatapathConfig):
    widest = max(cfg.accumulator_width, cfg.somatic_width, cfg.product_width) + 2
    return np.int64 if widest < 62 else object


def run_datapath(config: DatapathConfig, weights: WeightSet, params, context_raster, stimulus_raster,
                 cycles: int | None = None, record_trace: bool = True) -> tuple[np.ndarray, PipelineTrace]:
    """Clock the datapath over [cycles x channels] input rasters.

    Returns the [cycles x neurons] output spike raster and the trace.
    """
    n = config.neuron_count
    if (weights.neurons, weights.context_inputs, weights.stimulus_inputs) != (
            n, config.fan_in_context, config.fan_in_stimulus):
        raise DimensionMismatch("weights do not match DatapathConfig")
    if not isinstance(params, LayerParams):
        params = LayerParams.build(params, n)
    if (params.apical_width, params.somatic_width, params.weight_width) != (
            config.apical_width, config.somatic_width, config.weight_width):
        raise DimensionMismatch("NeuronParams widths disagree with DatapathConfig")
    weights.check_width(config.weight_width)

    ctx_in = np.asarray(context_raster, bool)
    stim_in = np.asarray(stimulus_raster, bool)
    if cycles is None:
        cycles = ctx_in.shape[0]
    if ctx_in.shape[0] < cycles or stim_in.shape[0] < cycles:
        raise DimensionMismatch("input rasters shorter than requested cycles")
    if ctx_in.shape[1] != config.fan_in_context or stim_in.shape[1] != config.fan_in_stimulus:
        raise DimensionMismatch("input raster widths do not match fan-in")

    dt = _pick_dtype(config)
    wc = weights.w_context.astype(dt)
    w_som = np.concatenate([weights.w_soma, weights.w_recurrent], axis=1).astype(dt)
    alpha = params.alpha_leak.astype(dt)
    beta = params.beta_leak.astype(dt)
    vth = params.v_threshold.astype(dt)
    N, S = config.apical_width, config.somatic_width
    policy = config.overflow
    zero = np.zeros((), dt)

    def register(x, width, what):
        lo, hi = int_range(width)
        if policy == "saturate":
            return np.clip(x, lo, hi)
        if x.size and (x.min() < lo or x.max() > hi):
            j = int(np.flatnonzero((x < lo) | (x > hi))[0])
            raise Overflow(f"{what} of neuron {j} = {x[j]} does not fit {width}-bit signed")
        return x

    aa_reg = np.zeros(n, dt)
    sa_reg = np.zeros(n, dt)
    spike_reg = np.zeros(n, bool)
    trace = PipelineTrace(config)
    raster = np.zeros((cycles, n), bool)

    for t in range(cycles):
        # SWM
        gated_ctx = np.where(ctx_in[t][None, :], wc, zero)
        gated_som = np.where(np.concatenate([stim_in[t], spike_reg])[None, :], w_som, zero)
        ctx_sum, trace.stages_context = _csa_tree(gated_ctx, config.accumulator_width, policy)
        som_sum, trace.stages_somatic = _csa_tree(gated_som, config.accumulator_width, policy)

        # AC
        aa = register(aa_reg - alpha + ctx_sum, N, "apical accumulator")
        aa_reg = np.where(_sign_bit(aa, N), zero, aa)

        # MU
        som_operand = register(som_sum, N, "somatic drive")
        product = register(aa_reg * som_operand, config.product_width, "MU product")

        # SC
        sa = register(sa_reg - beta + product, S, "somatic accumulator")
        sa = np.where(_sign_bit(sa, S), zero, sa)

        # TC, wired as RESET on SA
        fire = sa >= vth
        sa_reg = np.where(fire, zero, sa)
        spike_reg = fire
        raster[t] = fire

        if record_trace:
            for name, value in zip(BLOCKS, (ctx_sum, som_sum, aa_reg, product, sa_reg, fire.astype(np.int64))):
                trace.blocks[name].append(np.array(value))
    return raster, trace
