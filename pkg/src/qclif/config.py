"""Run configuration: an INI file with a single ``[run]`` section (and optional ``[task]``).

Example::

    [run]
    schema_version = 1
    neuron_count = 10
    stimulus_channels = 20
    context_channels = 5
    weight_width = 8
    apical_width = 16
    somatic_width = 32
    alpha_leak = 7
    beta_leak = 200
    v_threshold = 64
    seed = 1
    cycles = 1000
    mode = functional

Unknown keys are rejected so typos surface as config errors.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import NeuronParams, OVERFLOW_POLICIES, WeightSet
from .errors import ConfigError
from .fixedpoint import MAX_WIDTH, MIN_WIDTH
from .quantize import DEFAULT_APICAL_RANGE, DEFAULT_SOMA_RANGE, QuantizationSpec, quantize_weight_set
from .stimgen import make_rng

SCHEMA_VERSION = 1
MODES = ("functional", "datapath")


@dataclass
class TaskConfig:
    classes: int = 4
    neurons_per_class: int = 5
    channels_per_class: int = 16
    trials: int = 40
    trial_cycles: int = 100


@dataclass
class RunConfig:
    neuron_count: int = 10
    stimulus_channels: int = 20
    context_channels: int = 5
    weight_width: int = 8
    apical_width: int = 16
    somatic_width: int = 32
    alpha_leak: int = 7
    beta_leak: int = 200
    v_threshold: int = 64
    seed: int = 0
    cycles: int = 1000
    mode: str = "functional"
    overflow: str = "error"
    dt_ms: float = 1.0
    stimulus_rate_hz: float = 20.0
    context_rate_hz: float = 200.0
    weights: str | None = None
    energy_preset: str | None = None
    energy_per_spike_pj: str | None = None
    task: TaskConfig = field(default_factory=TaskConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("neuron_count", "stimulus_channels", "context_channels", "cycles"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("weight_width", "apical_width", "somatic_width"):
            if not MIN_WIDTH <= getattr(self, name) <= MAX_WIDTH:
                raise ConfigError(f"{name} must be in [{MIN_WIDTH}, {MAX_WIDTH}]")
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit value")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.overflow not in OVERFLOW_POLICIES:
            raise ConfigError(f"overflow must be one of {OVERFLOW_POLICIES}")
        try:
            self.neuron_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def synapse_count(self) -> int:
        return self.neuron_count * (self.context_channels + self.stimulus_channels + self.neuron_count)

    def neuron_params(self) -> NeuronParams:
        return NeuronParams(self.alpha_leak, self.beta_leak, self.v_threshold,
                            self.apical_width, self.somatic_width, self.weight_width)

    def weight_set(self, base_dir: Path | None = None) -> WeightSet:
        if self.weights:
            path = Path(self.weights)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return load_weights(path)
        return random_weight_set(self.neuron_count, self.context_channels, self.stimulus_channels,
                                 self.weight_width, self.seed)

    def echo(self) -> dict:
        d = asdict(self)
        d["task"] = asdict(self.task)
        return d


def random_weight_set(neurons: int, context: int, stimulus: int, bits: int, seed: int) -> WeightSet:
    """Zero-mean Gaussian weights (sigma = quarter range) quantized to ``bits``."""
    rng = make_rng(seed)
    apical_hi = DEFAULT_APICAL_RANGE[1]
    soma_hi = DEFAULT_SOMA_RANGE[1]
    wc = rng.normal(0.0, apical_hi / 4, (neurons, context))
    ws = rng.normal(0.0, soma_hi / 4, (neurons, stimulus))
    wr = rng.normal(0.0, soma_hi / 4, (neurons, neurons))
    return quantize_weight_set(wc, ws, wr, QuantizationSpec.symmetric(bits, soma_hi),
                               QuantizationSpec.symmetric(bits, apical_hi))


def save_weights(weights: WeightSet, path) -> None:
    with open(path, "wb") as fh:
        np.savez(fh, w_context=weights.w_context.astype(np.int64), w_soma=weights.w_soma.astype(np.int64),
                 w_recurrent=weights.w_recurrent.astype(np.int64))


def load_weights(path) -> WeightSet:
    try:
        with np.load(path) as data:
            return WeightSet(data["w_context"], data["w_soma"], data["w_recurrent"])
    except KeyError as exc:
        raise ConfigError(f"weights file {path} lacks array {exc}") from None


def _coerce(kind, raw: str, key: str):
    try:
        if kind in (int, "int"):
            return int(raw, 0)
        if kind in (float, "float"):
            return float(raw)
        if kind in ("str | None",) and raw.strip().lower() in ("", "none"):
            return None
        return raw.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None


def _section_to_kwargs(section, cls, where: str) -> dict:
    known = {f.name: f.type for f in fields(cls) if f.name != "task"}
    out = {}
    for key, raw in section.items():
        if key == "schema_version":
            continue
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        out[key] = _coerce(known[key], raw, key)
    return out


def loads_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config: {exc}") from None
    if "run" not in cp:
        raise ConfigError("missing [run] section")
    version = cp["run"].get("schema_version", str(SCHEMA_VERSION))
    if version.strip() != str(SCHEMA_VERSION):
        raise ConfigError(f"unsupported schema_version {version}")
    extra = set(cp.sections()) - {"run", "task"}
    if extra:
        raise ConfigError(f"unknown sections {sorted(extra)}")
    kw = _section_to_kwargs(cp["run"], RunConfig, "run")
    if "task" in cp:
        kw["task"] = TaskConfig(**_section_to_kwargs(cp["task"], TaskConfig, "task"))
    return RunConfig(**kw)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return loads_config(text)


def dumps_config(cfg: RunConfig) -> str:
    lines = ["[run]", f"schema_version = {SCHEMA_VERSION}"]
    for f in fields(cfg):
        if f.name == "task":
            continue
        value = getattr(cfg, f.name)
        if value is not None:
            lines.append(f"{f.name} = {value}")
    lines.append("")
    lines.append("[task]")
    for f in fields(cfg.task):
        lines.append(f"{f.name} = {getattr(cfg.task, f.name)}")
    return "\n".join(lines) + "\n"
