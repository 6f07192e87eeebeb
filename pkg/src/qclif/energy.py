"""Energy-per-spike reporting constants.

These are post-synthesis figures for a 45 nm implementation, used only as
multipliers to label an *estimate*. Nothing here models power.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError

ESTIMATE_LABEL = "estimate from paper constants"

# (neurons, clock MHz, synapses/precision) -> pJ per spike
PRESETS: dict[str, str] = {
    "1n-100mhz": "0.773",
    "10n-250syn-8bit-20mhz": "2.377",
    "10n-250syn-8bit-50mhz": "1.581",
    "10n-250syn-8bit-100mhz": "1.342",
    "10n-250syn-8bit-200mhz": "1.190",
    "200n-82k-4bit-100mhz": "8.7",
    "200n-82k-8bit-50mhz": "21.4",
    "200n-82k-8bit-100mhz": "17.9",
}
DEFAULT_PRESET = "10n-250syn-8bit-100mhz"


@dataclass(frozen=True)
class EnergyModel:
    energy_per_spike_pj: Fraction
    source: str

    def __post_init__(self):
        object.__setattr__(self, "energy_per_spike_pj", Fraction(self.energy_per_spike_pj))
        if self.energy_per_spike_pj < 0:
            raise ConfigError("energy_per_spike_pj must be non-negative")

    @classmethod
    def preset(cls, name: str) -> "EnergyModel":
        try:
            return cls(Fraction(PRESETS[name.lower()]), f"{ESTIMATE_LABEL}: {name.lower()}")
        except KeyError:
            raise ConfigError(f"unknown energy preset {name!r}; known: {sorted(PRESETS)}") from None

    @classmethod
    def constant(cls, pj: str) -> "EnergyModel":
        try:
            value = Fraction(pj)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"bad energy constant {pj!r}") from None
        return cls(value, f"{ESTIMATE_LABEL}: user constant")

    def estimate_pj(self, spikes: int) -> Fraction:
        return int(spikes) * self.energy_per_spike_pj


def format_fraction(x: Fraction) -> str:
    """Exact decimal string when the denominator allows it, else ``p/q``."""
    x = Fraction(x)
    d = x.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{x.numerator}/{x.denominator}"
    places = max(twos, fives)
    scaled = x * 10 ** places
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(places + 1, "0")
    if places == 0:
        return sign + digits
    return f"{sign}{digits[:-places]}.{digits[-places:]}".rstrip("0").rstrip(".")
