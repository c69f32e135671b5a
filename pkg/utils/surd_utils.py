"""
Exact quadratic surds (u + v*sqrt(D)) / w
"""

import math
from fractions import Fraction
from functools import total_ordering
from typing import Sequence, Tuple, Union

from mpmath import iv

from utils.errors import DomainError
from utils.interval_utils import MeasuredValue, iv_from_rational

Rational = Union[int, Fraction]

# square factors above this bound are only found if the cofactor is itself a square
TRIAL_DIVISION_LIMIT = 100_000


def square_free_split(D: int) -> Tuple[int, int]:
    """Return (s, core) with D = s^2 * core and core free of small square factors"""
    if D < 0:
        raise DomainError(f"Radicand must be >= 0, got {D}")
    if D == 0:
        return 1, 0
    root = math.isqrt(D)
    if root * root == D:
        return root, 1
    s, core = 1, D
    p = 2
    while p <= TRIAL_DIVISION_LIMIT and p * p <= core:
        while core % (p * p) == 0:
            core //= p * p
            s *= p
        p += 1 if p == 2 else 2
    root = math.isqrt(core)
    if root * root == core:
        return s * root, 1
    return s, core


def _sign_single(a: int, b: int, D: int) -> int:
    """Sign of a + b*sqrt(D)"""
    if b == 0 or D == 0:
        return (a > 0) - (a < 0)
    sb = (b > 0) - (b < 0)
    if a == 0:
        return sb
    sa = (a > 0) - (a < 0)
    if sa == sb:
        return sa
    lhs, rhs = a * a, b * b * D
    if lhs > rhs:
        return sa
    if lhs < rhs:
        return sb
    return 0


def _sign_pair(a: int, b: int, D1: int, c: int, D2: int) -> int:
    """Sign of a + b*sqrt(D1) + c*sqrt(D2)"""
    sx = _sign_single(a, b, D1)
    sy = _sign_single(0, c, D2)
    if sy == 0:
        return sx
    if sx == 0 or sx == sy:
        return sy if sx == 0 else sx
    # opposite signs: compare squares
    diff = _sign_single(a * a + b * b * D1 - c * c * D2, 2 * a * b, D1)
    if diff > 0:
        return sx
    if diff < 0:
        return sy
    return 0


@total_ordering
class QuadraticSurd:
    """
    The real number (u + v*sqrt(D)) / w, kept canonical: w > 0, gcd(u, v, w) = 1,
    D = 0 when v = 0, and D free of square factors (found by trial division)
    """

    __slots__ = ("u", "v", "D", "w")

    def __init__(self, u: int, v: int = 0, D: int = 0, w: int = 1):
        if w == 0:
            raise ZeroDivisionError("Surd with zero denominator")
        s, core = square_free_split(D)
        v *= s
        if core == 1:
            u, v, core = u + v, 0, 0
        if v == 0:
            core = 0
        if w < 0:
            u, v, w = -u, -v, -w
        g = math.gcd(math.gcd(u, v), w)
        self.u, self.v, self.D, self.w = u // g, v // g, core, w // g

    @classmethod
    def from_rational(cls, x: Rational) -> "QuadraticSurd":
        x = Fraction(x)
        return cls(x.numerator, 0, 0, x.denominator)

    @classmethod
    def sqrt(cls, x: Rational) -> "QuadraticSurd":
        x = Fraction(x)
        if x < 0:
            raise DomainError(f"Square root of a negative number {x}")
        return cls(0, 1, x.numerator * x.denominator, x.denominator)

    @classmethod
    def constant_stream_value(cls, z: Rational) -> "QuadraticSurd":
        """[0; z, z, z, ...] = (sqrt(z^2 + 4) - z) / 2 for real z >= 1"""
        z = Fraction(z)
        if z < 1:
            raise DomainError(f"Constant digit must be >= 1, got {z}")
        r, s = z.numerator, z.denominator
        return cls(-r, 1, r * r + 4 * s * s, 2 * s)

    @classmethod
    def periodic_value(cls, preamble: Sequence[int], block: Sequence[int]) -> "QuadraticSurd":
        """Exact value of [0; preamble, block, block, ...]"""
        if not block:
            raise DomainError("A periodic expansion needs a non-empty block")
        h_prev, h, k_prev, k = 1, block[0], 0, 1
        for b in block[1:]:
            h_prev, h = h, b * h + h_prev
            k_prev, k = k, b * k + k_prev
        # beta = (h*beta + h_prev) / (k*beta + k_prev), positive root
        diff = h - k_prev
        beta = cls(diff, 1, diff * diff + 4 * k * h_prev, 2 * k)
        y = beta
        for a in reversed(tuple(preamble)):
            y = a + 1 / y
        return 1 / y

    # predicates and conversions

    @property
    def is_rational(self) -> bool:
        return self.v == 0

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise DomainError(f"{self} is irrational")
        return Fraction(self.u, self.w)

    def sign(self) -> int:
        return _sign_single(self.u, self.v, self.D)

    def to_iv(self):
        if self.is_rational:
            return iv_from_rational(Fraction(self.u, self.w))
        root = iv.sqrt(iv.mpf(self.D))
        return (iv.mpf(self.u) + iv.mpf(self.v) * root) / iv.mpf(self.w)

    def to_measured(self) -> MeasuredValue:
        return MeasuredValue.from_interval(self.to_iv())

    def __float__(self) -> float:
        return (self.u + self.v * math.sqrt(self.D)) / self.w

    # arithmetic

    @staticmethod
    def _coerce(other) -> "QuadraticSurd":
        if isinstance(other, QuadraticSurd):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadraticSurd.from_rational(other)
        return NotImplemented

    def _radicand_with(self, other: "QuadraticSurd") -> int:
        if self.D and other.D and self.D != other.D:
            raise DomainError(f"Cannot combine sqrt({self.D}) with sqrt({other.D}) exactly")
        return self.D or other.D

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        D = self._radicand_with(other)
        return QuadraticSurd(
            self.u * other.w + other.u * self.w,
            self.v * other.w + other.v * self.w,
            D,
            self.w * other.w,
        )

    __radd__ = __add__

    def __neg__(self):
        return QuadraticSurd(-self.u, -self.v, self.D, self.w)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        D = self._radicand_with(other)
        return QuadraticSurd(
            self.u * other.u + self.v * other.v * D,
            self.u * other.v + self.v * other.u,
            D,
            self.w * other.w,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        norm = other.u * other.u - other.v * other.v * other.D
        if norm == 0:
            raise ZeroDivisionError("Division by a zero surd")
        numerator = self * QuadraticSurd(other.u, -other.v, other.D, 1)
        return numerator * Fraction(other.w, norm)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    # comparison

    def compare(self, other) -> int:
        """Exact sign of self - other"""
        other = self._coerce(other)
        a = self.u * other.w - other.u * self.w
        return _sign_pair(a, self.v * other.w, self.D, -other.v * self.w, other.D)

    def __eq__(self, other):
        if self._coerce(other) is NotImplemented:
            return NotImplemented
        return self.compare(other) == 0

    def __lt__(self, other):
        if self._coerce(other) is NotImplemented:
            return NotImplemented
        return self.compare(other) < 0

    def __hash__(self):
        if self.is_rational:
            return hash(Fraction(self.u, self.w))
        return hash((self.u, self.v, self.D, self.w))

    def __repr__(self):
        return f"QuadraticSurd({self.u}, {self.v}, {self.D}, {self.w})"

    def __str__(self):
        if self.is_rational:
            return str(Fraction(self.u, self.w))
        coeff = abs(self.v)
        root = f"√{self.D}" if coeff == 1 else f"{coeff}√{self.D}"
        if self.u == 0:
            body = root if self.v > 0 else f"-{root}"
        else:
            body = f"{self.u} {'+' if self.v > 0 else '-'} {root}"
        if self.w == 1:
            return body
        return f"({body})/{self.w}"
