"""
Certified numerics: exact rational intervals and mpmath interval arithmetic
"""

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Union

from mpmath import iv, mp, mpf

Rational = Union[int, Fraction]


@contextmanager
def interval_precision(bits: int) -> Iterator[None]:
    """Run a block with the interval context at ``bits`` of working precision"""
    saved = iv.prec
    iv.prec = int(bits)
    try:
        yield
    finally:
        iv.prec = saved


def _raw_mpf(x):
    """Underlying mpf tuple of an mpf or a zero-width interval, without rounding"""
    if hasattr(x, "_mpi_"):
        lo, hi = x._mpi_
        if lo != hi:
            raise ValueError("expected a zero-width interval")
        return lo
    return x._mpf_


def mpf_to_fraction(x) -> Fraction:
    """Exact rational value of a finite mpf"""
    man, exp = mp.make_mpf(_raw_mpf(x)).man_exp
    if exp >= 0:
        return Fraction(int(man) << int(exp))
    return Fraction(int(man), 1 << int(-exp))


def iv_from_rational(x: Rational):
    """Tightest outward-rounded interval around an exact rational"""
    x = Fraction(x)
    if x.denominator == 1:
        return iv.mpf(x.numerator)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def iv_hull(lower, upper):
    """Interval from the lower end of ``lower`` to the upper end of ``upper``"""
    return iv.mpf([lower, upper])


def iv_lo(x) -> mpf:
    """Lower endpoint as an mpf, exactly"""
    return mp.make_mpf(x._mpi_[0])


def iv_hi(x) -> mpf:
    """Upper endpoint as an mpf, exactly"""
    return mp.make_mpf(x._mpi_[1])


def iv_sum(terms: Iterable):
    """Outward-rounded sum of intervals"""
    total = iv.mpf(0)
    for term in terms:
        total = total + term
    return total


@dataclass(frozen=True)
class RationalInterval:
    """Closed interval [lo, hi] with exact rational endpoints"""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"Invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Rational) -> "RationalInterval":
        return cls(Fraction(x), Fraction(x))

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: Rational) -> bool:
        return self.lo <= Fraction(x) <= self.hi

    def to_iv(self):
        if self.is_point:
            return iv_from_rational(self.lo)
        return iv_hull(iv_from_rational(self.lo), iv_from_rational(self.hi))

    def __str__(self) -> str:
        if self.is_point:
            return str(self.lo)
        return f"[{self.lo}, {self.hi}]"


@dataclass(frozen=True)
class MeasuredValue:
    """
    A number with a rigorous absolute error bound

    ``lo``/``hi`` are the certified endpoints; ``value`` is their midpoint and
    ``err`` bounds the distance from ``value`` to either end.
    """

    value: mpf
    err: mpf
    lo: mpf
    hi: mpf

    @classmethod
    def from_interval(cls, x) -> "MeasuredValue":
        lo, hi = iv_lo(x), iv_hi(x)
        point = x.mid
        value = mp.make_mpf(point._mpi_[0])
        above = iv_hi(iv.mpf(hi) - point)
        below = iv_hi(point - iv.mpf(lo))
        err = max(above, below, mpf(0))
        return cls(value=value, err=err, lo=lo, hi=hi)

    @classmethod
    def exact(cls, x: Rational) -> "MeasuredValue":
        return cls.from_interval(iv_from_rational(x))

    @classmethod
    def from_rational_interval(cls, x: RationalInterval) -> "MeasuredValue":
        return cls.from_interval(x.to_iv())

    def to_iv(self):
        return iv.mpf([self.lo, self.hi])

    @property
    def width(self) -> mpf:
        return iv_hi(self.to_iv().delta)

    def contains(self, x) -> bool:
        """Exact containment for rationals and intervals, rounded for floats"""
        if isinstance(x, (int, Fraction)):
            return mpf_to_fraction(self.lo) <= Fraction(x) <= mpf_to_fraction(self.hi)
        if hasattr(x, "_mpi_"):
            return self.lo <= iv_lo(x) and iv_hi(x) <= self.hi
        return self.lo <= mpf(x) <= self.hi

    def __add__(self, other: "MeasuredValue") -> "MeasuredValue":
        return MeasuredValue.from_interval(self.to_iv() + other.to_iv())

    def __sub__(self, other: "MeasuredValue") -> "MeasuredValue":
        return MeasuredValue.from_interval(self.to_iv() - other.to_iv())

    def __abs__(self) -> "MeasuredValue":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return MeasuredValue.from_interval(-self.to_iv())
        reach = max(iv_hi(-self.to_iv()), self.hi)
        return MeasuredValue.from_interval(iv.mpf([0, reach]))

    def scaled(self, factor: Rational) -> "MeasuredValue":
        return MeasuredValue.from_interval(self.to_iv() * iv_from_rational(factor))

    def divided(self, divisor) -> "MeasuredValue":
        if isinstance(divisor, MeasuredValue):
            return MeasuredValue.from_interval(self.to_iv() / divisor.to_iv())
        if hasattr(divisor, "_mpi_"):
            return MeasuredValue.from_interval(self.to_iv() / divisor)
        return MeasuredValue.from_interval(self.to_iv() / iv_from_rational(divisor))

    def __float__(self) -> float:
        return float(self.value)

    def __str__(self) -> str:
        return f"{mp.nstr(self.value, 15)} ± {mp.nstr(self.err, 3)}"


def format_lower(x, places: int = 20) -> str:
    """Decimal string at or below the lower endpoint of ``x``"""
    frac = _as_fraction(iv_lo(x) if hasattr(x, "_mpi_") else x)
    return _decimal(math.floor(frac * 10**places), places)


def format_upper(x, places: int = 20) -> str:
    """Decimal string at or above the upper endpoint of ``x``"""
    frac = _as_fraction(iv_hi(x) if hasattr(x, "_mpi_") else x)
    return _decimal(math.ceil(frac * 10**places), places)


def _as_fraction(x) -> Fraction:
    if hasattr(x, "_mpf_"):
        return mpf_to_fraction(x)
    return Fraction(x)


def _decimal(scaled: int, places: int) -> str:
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(places + 1, "0")
    whole, frac = digits[:-places], digits[-places:].rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"
