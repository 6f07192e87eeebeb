"""Simulation, comparison, sweep, statistics and benchmark drivers behind the CLI."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .core import LayerParams, QclifLayer
from .datapath import DatapathConfig, run_datapath
from .energy import DEFAULT_PRESET, EnergyModel, format_fraction
from .errors import ConfigError
from .quantize import ActivityReport, activity_stats, weight_histogram
from .stimgen import EventStream, make_rng, poisson_raster, read_event_stream, write_event_stream
from .task import synth_context_task, trial_counts

REPORT_SCHEMA = 1


def energy_model(cfg: RunConfig) -> EnergyModel:
    if cfg.energy_per_spike_pj is not None:
        return EnergyModel.constant(cfg.energy_per_spike_pj)
    return EnergyModel.preset(cfg.energy_preset or DEFAULT_PRESET)


def _stream_raster(path, channels: int, cycles: int, what: str) -> np.ndarray:
    stream = read_event_stream(path)
    if stream.channel_count > channels:
        raise ConfigError(f"{what} stream has {stream.channel_count} channels, config allows {channels}")
    r = np.zeros((cycles, channels), bool)
    r[:, :stream.channel_count] = stream.to_raster(cycles)
    return r


def input_rasters(cfg: RunConfig, stimulus_path=None, context_path=None) -> tuple[np.ndarray, np.ndarray]:
    """(context, stimulus) rasters; missing streams are drawn from seeded Poisson sources."""
    rng = make_rng(cfg.seed ^ 0x5EED_C0DE)
    if context_path is not None:
        ctx = _stream_raster(context_path, cfg.context_channels, cfg.cycles, "context")
    else:
        ctx = poisson_raster(cfg.context_rate_hz, cfg.dt_ms, cfg.context_channels, cfg.cycles, rng)
    if stimulus_path is not None:
        stim = _stream_raster(stimulus_path, cfg.stimulus_channels, cfg.cycles, "stimulus")
    else:
        stim = poisson_raster(cfg.stimulus_rate_hz, cfg.dt_ms, cfg.stimulus_channels, cfg.cycles, rng)
    return ctx, stim


def simulate_raster(cfg: RunConfig, weights, ctx, stim, mode: str | None = None, trace_path=None) -> np.ndarray:
    mode = mode or cfg.mode
    if (weights.neurons, weights.context_inputs, weights.stimulus_inputs) != (
            cfg.neuron_count, cfg.context_channels, cfg.stimulus_channels):
        raise ConfigError("weights file shape does not match config dimensions")
    params = LayerParams.build(cfg.neuron_params(), cfg.neuron_count, cfg.overflow)
    if mode == "functional":
        raster, _ = QclifLayer(weights, params).run(ctx, stim)
        return raster
    dp = DatapathConfig.for_layer(weights, params, overflow=cfg.overflow)
    raster, trace = run_datapath(dp, weights, params, ctx, stim, record_trace=trace_path is not None)
    if trace_path is not None:
        trace.write_csv(trace_path)
    return raster


@dataclass
class RunReport:
    config: dict
    seed: int
    mode: str
    cycles: int
    total_spikes: int
    activity: ActivityReport
    energy: EnergyModel
    wall_seconds: float
    synapses: int
    extra: dict = field(default_factory=dict)

    @property
    def energy_pj(self):
        return self.energy.estimate_pj(self.total_spikes)

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "schema_version": REPORT_SCHEMA,
            "mode": self.mode,
            "seed": self.seed,
            "cycles": self.cycles,
            "neurons": int(self.activity.channel_counts.size),
            "synapses": self.synapses,
            "total_spikes": self.total_spikes,
            "sparsity": self.activity.sparsity,
            "spikes_per_neuron": self.activity.channel_counts.tolist(),
            "energy": {
                "per_spike_pj": format_fraction(self.energy.energy_per_spike_pj),
                "total_pj": format_fraction(self.energy_pj),
                "source": self.energy.source,
            },
            "config": self.config,
        }
        if include_timing:
            steps = self.cycles / self.wall_seconds if self.wall_seconds > 0 else float("inf")
            d["throughput"] = {"wall_seconds": self.wall_seconds, "layer_steps_per_s": steps,
                               "synaptic_ops_per_s": steps * self.synapses}
        d.update(self.extra)
        return d

    def summary(self) -> str:
        return (f"{self.mode}: {self.cycles} cycles, {self.total_spikes} spikes, "
                f"sparsity {self.activity.sparsity:.4f}, "
                f"energy {format_fraction(self.energy_pj)} pJ ({self.energy.source})")


def cmd_simulate(config_path, stimulus_path=None, context_path=None, out_dir=None, *,
                 seed: int | None = None, mode: str | None = None, bits: int | None = None,
                 trace: bool = False) -> RunReport:
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = seed
    if mode is not None:
        cfg.mode = mode
    if bits is not None:
        cfg.weight_width = bits
    cfg.validate()
    weights = cfg.weight_set(Path(config_path).parent)
    ctx, stim = input_rasters(cfg, stimulus_path, context_path)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    raster = simulate_raster(cfg, weights, ctx, stim, cfg.mode,
                             out / "trace.csv" if (trace and out is not None and cfg.mode == "datapath") else None)
    wall = time.perf_counter() - t0
    report = RunReport(cfg.echo(), cfg.seed, cfg.mode, cfg.cycles, int(raster.sum()),
                       activity_stats(raster), energy_model(cfg), wall, weights.synapse_count)
    if out is not None:
        write_event_stream(EventStream.from_raster(raster), out / "raster.csv")
        (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return report


@dataclass
class CompareResult:
    cycles: int
    neurons: int
    mismatches: list[tuple[int, int, int, int]]

    @property
    def identical(self) -> bool:
        return not self.mismatches


def cmd_compare(config_path, stimulus_path=None, context_path=None, out_path=None, *,
                seed: int | None = None) -> CompareResult:
    cfg = load_config(config_path)
    if seed is not None:
        cfg.seed = seed
    weights = cfg.weight_set(Path(config_path).parent)
    ctx, stim = input_rasters(cfg, stimulus_path, context_path)
    functional = simulate_raster(cfg, weights, ctx, stim, "functional")
    datapath = simulate_raster(cfg, weights, ctx, stim, "datapath")
    t, j = np.nonzero(functional != datapath)
    diffs = [(int(a), int(b), int(functional[a, b]), int(datapath[a, b])) for a, b in zip(t, j)]
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cycle", "neuron", "functional", "datapath"])
            w.writerows(diffs)
    return CompareResult(cfg.cycles, cfg.neuron_count, diffs)


SWEEP_HEADER = ["precision", "bits", "accuracy", "mean_spikes_matched", "mean_spikes_mismatched", "degraded"]


def cmd_sweep(config_path, bits_list=(16, 8, 4, 2), trials: int | None = None, out_path=None, *,
              seed: int | None = None) -> list[dict]:
    """One row per precision on the synthetic context task; the first row is full precision."""
    cfg = load_config(config_path)
    for b in bits_list:
        if not 2 <= b <= 16:
            raise ConfigError(f"sweep width {b} outside [2, 16]")
    t = cfg.task
    task = synth_context_task(t.classes, t.neurons_per_class, t.channels_per_class,
                              seed=cfg.seed if seed is None else seed,
                              trials=trials or t.trials, trial_cycles=t.trial_cycles,
                              context_rate_hz=cfg.context_rate_hz, dt_ms=cfg.dt_ms)
    labels = task.labels.astype(bool)
    rows = []
    baseline = None
    for bits in [None, *bits_list]:
        counts = trial_counts(task, bits)
        acc = float(np.mean((counts > task.decision_threshold) == labels))
        baseline = acc if baseline is None else baseline
        rows.append({
            "precision": "full" if bits is None else f"{bits}-bit",
            "bits": "" if bits is None else bits,
            "accuracy": acc,
            "mean_spikes_matched": float(counts[labels].mean()),
            "mean_spikes_mismatched": float(counts[~labels].mean()),
            "degraded": int(acc < baseline),
        })
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, SWEEP_HEADER, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    return rows


@dataclass
class BenchReport:
    neurons: int
    synapses: int
    cycles: int
    wall_seconds: float

    @property
    def layer_steps_per_s(self) -> float:
        return self.cycles / self.wall_seconds

    @property
    def synaptic_ops_per_s(self) -> float:
        return self.layer_steps_per_s * self.synapses

    def to_dict(self) -> dict:
        return {"neurons": self.neurons, "synapses": self.synapses, "cycles": self.cycles,
                "wall_seconds": self.wall_seconds, "layer_steps_per_s": self.layer_steps_per_s,
                "synaptic_ops_per_s": self.synaptic_ops_per_s}


def bench_config(cfg: RunConfig, cycles: int | None = None, warmup: int = 20, repeats: int = 1) -> BenchReport:
    """Time functional ``step`` calls, excluding ``warmup`` steps; best of ``repeats``."""
    cycles = cycles or cfg.cycles
    cfg_inputs = RunConfig(**{**vars(cfg), "cycles": cycles + warmup})
    weights = cfg.weight_set()
    ctx, stim = input_rasters(cfg_inputs)
    # timing run must not abort on a mis-sized config; its spikes are discarded
    layer = QclifLayer(weights, LayerParams.build(cfg.neuron_params(), cfg.neuron_count, "saturate"))
    best = float("inf")
    for _ in range(repeats):
        state = layer.initial_state()
        for t in range(warmup):
            state, _ = layer.step(state, ctx[t], stim[t])
        t0 = time.perf_counter()
        for t in range(warmup, warmup + cycles):
            state, _ = layer.step(state, ctx[t], stim[t])
        best = min(best, time.perf_counter() - t0)
    return BenchReport(cfg.neuron_count, weights.synapse_count, cycles, best)


def cmd_bench(config_path, cycles: int | None = None, out_path=None) -> BenchReport:
    report = bench_config(load_config(config_path), cycles)
    if out_path is not None:
        Path(out_path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return report


@dataclass
class StatsResult:
    activity: ActivityReport
    files: list[Path]


def cmd_stats(raster_path, out_dir, config_path=None, bins: int = 32) -> StatsResult:
    """Activity report for a raster file plus, given a config, weight histograms."""
    stream = read_event_stream(raster_path)
    activity = activity_stats(stream.to_raster())
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [out / "activity.csv", out / "channel_counts.csv", out / "activity_histogram.csv"]
    activity.write_csv(files[0])
    with open(files[1], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["channel", "spikes"])
        w.writerows(enumerate(activity.channel_counts.tolist()))
    weight_histogram(activity.channel_counts, bins).write_csv(files[2])
    if config_path is not None:
        cfg = load_config(config_path)
        weights = cfg.weight_set(Path(config_path).parent)
        for name in ("w_context", "w_soma", "w_recurrent"):
            path = out / f"hist_{name}.csv"
            weight_histogram(getattr(weights, name), bins).write_csv(path)
            files.append(path)
    return StatsResult(activity, files)
