"""Exact two's-complement fixed-point arithmetic and accumulator sizing.

Every register in the neuron model is an integer of a declared bit width.
Nothing here ever wraps: a value that does not fit raises :class:`Overflow`
unless the caller explicitly asks for :func:`saturate`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import Overflow, ScaleMismatch

MIN_WIDTH = 2
MAX_WIDTH = 64


def int_range(width: int, signed: bool = True) -> tuple[int, int]:
    """Inclusive (lo, hi) representable in ``width`` bits."""
    if signed:
        return -(1 << (width - 1)), (1 << (width - 1)) - 1
    return 0, (1 << width) - 1


def fits(value: int, width: int, signed: bool = True) -> bool:
    lo, hi = int_range(width, signed)
    return lo <= value <= hi


def check_fits(value: int, width: int, what: str = "value", signed: bool = True) -> int:
    if not fits(value, width, signed):
        kind = "signed" if signed else "unsigned"
        raise Overflow(f"{what}={value} does not fit {width}-bit {kind}")
    return value


def bits_needed(max_abs: int, signed: bool) -> int:
    """Smallest width holding every integer in [-max_abs, max_abs] (signed) or [0, max_abs]."""
    if max_abs < 0:
        raise ValueError("max_abs must be non-negative")
    if signed:
        return max_abs.bit_length() + 1
    return max(1, max_abs.bit_length())


@dataclass(frozen=True)
class FixedPointValue:
    """``real = raw * scale``; ``raw`` always fits ``width`` bits."""

    raw: int
    width: int
    scale: Fraction = Fraction(1)
    signed: bool = True

    def __post_init__(self):
        if not MIN_WIDTH <= self.width <= MAX_WIDTH:
            raise ValueError(f"width must be in [{MIN_WIDTH}, {MAX_WIDTH}], got {self.width}")
        object.__setattr__(self, "raw", int(self.raw))
        object.__setattr__(self, "scale", Fraction(self.scale))
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        check_fits(self.raw, self.width, "raw", self.signed)

    @property
    def real(self) -> Fraction:
        return self.raw * self.scale

    def __float__(self):
        return float(self.real)


@dataclass(frozen=True)
class WidthReport:
    terms: int
    term_width: int
    required_width: int
    max_abs_sum: int
    signed: bool


def add_exact(a: FixedPointValue, b: FixedPointValue, out_width: int) -> FixedPointValue:
    if a.scale != b.scale:
        raise ScaleMismatch(f"cannot add scale {a.scale} to scale {b.scale}")
    total = a.raw + b.raw
    signed = a.signed or b.signed
    check_fits(total, out_width, "sum", signed)
    return FixedPointValue(total, out_width, a.scale, signed)


def required_accumulator_width(terms: int, term_max_abs: int, signed: bool = True) -> WidthReport:
    """Size an accumulator for ``terms`` inputs each bounded by ``term_max_abs`` in magnitude.

    >>> required_accumulator_width(500, 255, signed=False).required_width
    17
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if term_max_abs < 0:
        raise ValueError("term_max_abs must be >= 0")
    max_abs_sum = terms * term_max_abs
    return WidthReport(
        terms=terms,
        term_width=bits_needed(term_max_abs, signed),
        required_width=bits_needed(max_abs_sum, signed),
        max_abs_sum=max_abs_sum,
        signed=signed,
    )


def saturate(a: int, width: int, signed: bool = True, scale: Fraction = Fraction(1)) -> FixedPointValue:
    if width < MIN_WIDTH:
        raise ValueError("width must be >= 2")
    lo, hi = int_range(width, signed)
    return FixedPointValue(min(max(int(a), lo), hi), width, scale, signed)
