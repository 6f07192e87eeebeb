"""Range-tailored symmetric quantization plus activity and histogram statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import WeightSet
from .errors import EmptyRaster, NonFiniteInput

DEFAULT_SOMA_RANGE = (-0.5, 0.5)
DEFAULT_APICAL_RANGE = (-2.0, 2.0)


@dataclass(frozen=True)
class QuantizationSpec:
    """Symmetric signed grid ``{-qmax..qmax} * scale`` covering [range_lo, range_hi].

    ``qmax = 2**(bits-1) - 1`` so the most negative code is never used and
    negation is exact.
    """

    bits: int
    range_lo: Fraction
    range_hi: Fraction
    mode: str = "symmetric-signed"

    def __post_init__(self):
        if not 2 <= self.bits <= 16:
            raise ValueError(f"bits must be in [2, 16], got {self.bits}")
        object.__setattr__(self, "range_lo", Fraction(self.range_lo))
        object.__setattr__(self, "range_hi", Fraction(self.range_hi))
        if not self.range_lo < self.range_hi:
            raise ValueError("range_lo must be below range_hi")
        if not self.range_lo <= 0 <= self.range_hi:
            raise ValueError("range must contain zero")
        if self.mode != "symmetric-signed":
            raise ValueError(f"unsupported mode {self.mode!r}")

    @classmethod
    def symmetric(cls, bits: int, half_range: float) -> "QuantizationSpec":
        return cls(bits, -Fraction(half_range), Fraction(half_range))

    @property
    def qmax(self) -> int:
        return (1 << (self.bits - 1)) - 1

    @property
    def scale(self) -> Fraction:
        return max(-self.range_lo, self.range_hi) / self.qmax


def quantize_value(x: float, spec: QuantizationSpec) -> int:
    """Clamp, then round ``x / scale`` to the nearest grid code (ties to even), exactly."""
    if not math.isfinite(x):
        raise NonFiniteInput(f"cannot quantize {x!r}")
    xf = min(max(Fraction(x), spec.range_lo), spec.range_hi)
    q = round(xf / spec.scale)
    return max(-spec.qmax, min(spec.qmax, q))


def dequantize_value(q: int, spec: QuantizationSpec) -> float:
    return float(q * spec.scale)


def quantize_array(x, spec: QuantizationSpec) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    flat = [quantize_value(float(v), spec) for v in x.ravel()]
    return np.array(flat, dtype=np.int64).reshape(x.shape)


def dequantize_array(q, spec: QuantizationSpec) -> np.ndarray:
    return np.asarray(q, dtype=np.float64) * float(spec.scale)


def quantize_weight_set(w_context, w_soma, w_recurrent, soma_spec: QuantizationSpec,
                        apical_spec: QuantizationSpec, recurrent_spec: QuantizationSpec | None = None
                        ) -> WeightSet:
    """Quantize float matrices, each with its own spec (recurrent defaults to the soma spec)."""
    recurrent_spec = recurrent_spec or soma_spec
    return WeightSet(quantize_array(w_context, apical_spec),
                     quantize_array(w_soma, soma_spec),
                     quantize_array(w_recurrent, recurrent_spec))


@dataclass(frozen=True)
class ActivityReport:
    channel_counts: np.ndarray
    population_fraction: np.ndarray
    sparsity: float

    @property
    def total_spikes(self) -> int:
        return int(self.channel_counts.sum())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cycle", "population_fraction"])
            w.writerows((t, repr(float(f))) for t, f in enumerate(self.population_fraction))


def activity_stats(raster) -> ActivityReport:
    """``raster`` is [cycles x channels]; sparsity is the overall fraction of set bits."""
    r = np.asarray(raster, dtype=bool)
    if r.ndim != 2 or r.size == 0:
        raise EmptyRaster("raster has no cycles or no channels")
    counts = r.sum(axis=0).astype(np.int64)
    per_cycle = r.sum(axis=1) / r.shape[1]
    return ActivityReport(counts, per_cycle, float(counts.sum() / r.size))


@dataclass(frozen=True)
class WeightHistogram:
    edges: np.ndarray
    counts: np.ndarray
    minimum: float
    maximum: float
    mean: float

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "count"])
            for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
                w.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def weight_histogram(weights, bins: int = 32, value_range: tuple[float, float] | None = None) -> WeightHistogram:
    if bins < 1:
        raise ValueError("bins must be >= 1")
    w = np.asarray(weights, dtype=np.float64).ravel()
    if w.size == 0:
        raise ValueError("no weights to histogram")
    lo, hi = value_range or (float(w.min()), float(w.max()))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(w, bins=bins, range=(lo, hi))
    return WeightHistogram(edges, counts.astype(np.int64), float(w.min()), float(w.max()), float(w.mean()))
