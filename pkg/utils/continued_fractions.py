"""
Continued-fraction arithmetic: digit streams, continuants, tails and digit extraction
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.config import DEFAULT_BITS
from utils.errors import (
    DomainError,
    InsufficientPrecisionError,
    InvalidDigitError,
    NeedsMoreDigitsError,
)
from utils.interval_utils import RationalInterval, iv_from_rational, iv_hull
from utils.surd_utils import QuadraticSurd

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).resolve().parent.parent / "data" / "alpha_presets.json"
TRUNCATION_MARK = "…"


def _increasing_rule(nu: int) -> int:
    return nu


def _euler_rule(nu: int) -> int:
    # e - 2 = [0; 1, 2, 1, 1, 4, 1, 1, 6, ...]
    if nu % 3 == 2:
        return 2 * (nu + 1) // 3
    return 1


RULES = {
    "increasing": _increasing_rule,
    "euler": _euler_rule,
}


def validate_digit(a) -> int:
    """Return ``a`` as an int, or raise InvalidDigitError for anything but an integer >= 1"""
    if isinstance(a, bool) or not isinstance(a, (int, np.integer)):
        raise InvalidDigitError(f"Partial quotient must be an integer, got {a!r}")
    if a < 1:
        raise InvalidDigitError(f"Partial quotient must be >= 1, got {a}")
    return int(a)


@dataclass(frozen=True)
class PartialQuotients:
    """
    The digit stream a_1, a_2, ... of a number in (0, 1)

    ``source`` is one of explicit, periodic, random, rule or constructed.
    Explicit, random and constructed streams store ``preamble`` only; a
    periodic stream repeats ``block`` after the preamble; a rule stream asks
    a named function of the index. ``terminates`` marks a stored list that is
    the complete expansion of a rational, so its tails past the end are
    infinite instead of unknown.
    """

    source: str
    preamble: Tuple[int, ...] = ()
    block: Tuple[int, ...] = ()
    rule: Optional[str] = None
    terminates: bool = False
    seed: Optional[int] = None
    bits: Optional[int] = None
    label: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "preamble", tuple(validate_digit(a) for a in self.preamble))
        object.__setattr__(self, "block", tuple(validate_digit(a) for a in self.block))
        if self.source == "periodic" and not self.block:
            raise DomainError("A periodic stream needs a non-empty repeating block")
        if self.source == "rule" and self.rule not in RULES:
            raise DomainError(f"Unknown digit rule {self.rule!r}; choose from {sorted(RULES)}")
        if self.source in ("explicit", "random", "constructed") and not self.preamble:
            raise DomainError("A stored digit stream needs at least one digit")

    # constructors

    @classmethod
    def explicit(cls, digits: Sequence[int], terminates: bool = True, label: str = "") -> "PartialQuotients":
        return cls(source="explicit", preamble=tuple(digits), terminates=terminates, label=label)

    @classmethod
    def periodic(cls, preamble: Sequence[int], block: Sequence[int], label: str = "") -> "PartialQuotients":
        return cls(source="periodic", preamble=tuple(preamble), block=tuple(block), label=label)

    @classmethod
    def from_rule(cls, name: str, label: str = "") -> "PartialQuotients":
        return cls(source="rule", rule=name, label=label or name)

    @classmethod
    def constructed(cls, digits: Sequence[int], label: str = "") -> "PartialQuotients":
        return cls(source="constructed", preamble=tuple(digits), label=label)

    @classmethod
    def random(cls, seed: int, bits: int) -> "PartialQuotients":
        return extract_digits(bits, seed)

    @classmethod
    def golden(cls) -> "PartialQuotients":
        return cls.periodic((), (1,), label="golden")

    @classmethod
    def from_rational(cls, x: Union[int, Fraction, str]) -> "PartialQuotients":
        return cls.explicit(rational_digits(Fraction(x)), terminates=True, label=str(Fraction(x)))

    # access

    @property
    def length(self) -> Optional[int]:
        """Number of known digits, or None for an unbounded stream"""
        if self.source in ("periodic", "rule"):
            return None
        return len(self.preamble)

    @property
    def certified_count(self) -> Optional[int]:
        return self.length

    def has_digit(self, nu: int) -> bool:
        return nu >= 1 and (self.length is None or nu <= self.length)

    def digit(self, nu: int) -> int:
        if nu < 1:
            raise DomainError(f"Digit index must be >= 1, got {nu}")
        if self.source == "rule":
            return validate_digit(RULES[self.rule](nu))
        if nu <= len(self.preamble):
            return self.preamble[nu - 1]
        if self.source == "periodic":
            return self.block[(nu - len(self.preamble) - 1) % len(self.block)]
        if self.terminates:
            raise NeedsMoreDigitsError(
                f"The expansion of this rational ends at digit {self.length}",
                required=nu,
                available=self.length,
            )
        raise NeedsMoreDigitsError(
            f"Digit {nu} requested but only {self.length} digits are certified",
            required=nu,
            available=self.length,
        )

    def digits(self, n: int) -> Tuple[int, ...]:
        """First ``n`` digits"""
        if n <= 0:
            return ()
        if self.length is not None:
            if n > self.length:
                self.digit(n)
            return self.preamble[:n]
        return tuple(self.digit(nu) for nu in range(1, n + 1))

    def available(self, n: int) -> int:
        """How many of the first ``n`` digits exist"""
        if self.length is None:
            return n
        return min(n, self.length)

    def prefix(self, n: int) -> "PartialQuotients":
        """The first ``n`` digits as a non-terminating stored stream"""
        return PartialQuotients.explicit(self.digits(n), terminates=False, label=self.label)

    def value(self) -> Union[Fraction, QuadraticSurd]:
        """Exact value of a terminating or periodic stream"""
        if self.source == "periodic":
            return QuadraticSurd.periodic_value(self.preamble, self.block)
        if not (self.source == "explicit" and self.terminates):
            raise DomainError("Only a terminating or periodic stream has an exact value")
        p, q = convergent_table(self, self.length)
        return Fraction(p[-1], q[-1])

    # serialization

    def serialize(self, max_digits: Optional[int] = None) -> str:
        """Comma-separated digits, with a trailing marker when the list is cut short"""
        if self.length is None:
            shown = max_digits if max_digits is not None else len(self.preamble) + len(self.block)
            digits = self.digits(shown)
            return ",".join(str(a) for a in digits) + TRUNCATION_MARK
        digits = self.preamble
        truncated = max_digits is not None and max_digits < len(digits)
        if truncated:
            digits = digits[:max_digits]
        text = ",".join(str(a) for a in digits)
        if truncated or not self.terminates:
            text += TRUNCATION_MARK
        return text

    @staticmethod
    def parse_digit_field(text: str) -> Tuple[Tuple[int, ...], bool]:
        """Inverse of ``serialize``: the digit list and whether it was marked as a prefix"""
        text = text.strip()
        truncated = text.endswith(TRUNCATION_MARK) or text.endswith("...")
        text = text.rstrip(TRUNCATION_MARK).rstrip(".").strip().rstrip(",")
        if not text:
            return (), truncated
        try:
            digits = tuple(int(part) for part in text.replace(" ", "").split(","))
        except ValueError:
            raise InvalidDigitError(f"Malformed digit list: {text!r}")
        return digits, truncated

    @classmethod
    def parse(cls, text: str, bits: Optional[int] = None) -> "PartialQuotients":
        """
        Parse an alpha expression

        Accepted forms: a preset name (golden, silver, ...), ``[0;a1,a2,...]``
        (a trailing ``...`` marks a prefix of an irrational), ``periodic:pre|rep``,
        ``rule:name``, ``random:seed``, ``file:path`` and a rational ``p/q``.
        """
        text = text.strip()
        if not text:
            raise DomainError("Empty alpha expression")
        presets = load_presets()
        if text in presets:
            return presets[text]
        if text.startswith("[") and text.endswith("]"):
            body = text[1:-1]
            head, sep, rest = body.partition(";")
            if not sep or head.strip() not in ("", "0"):
                raise DomainError(f"Expected [0;a1,a2,...], got {text!r}")
            digits, truncated = cls.parse_digit_field(rest)
            return cls.explicit(digits, terminates=not truncated, label=text)
        kind, sep, arg = text.partition(":")
        if sep:
            if kind == "periodic":
                pre, bar, rep = arg.partition("|")
                if not bar:
                    raise DomainError(f"Expected periodic:pre|rep, got {text!r}")
                return cls.periodic(cls.parse_digit_field(pre)[0], cls.parse_digit_field(rep)[0], label=text)
            if kind == "rule":
                return cls.from_rule(arg.strip())
            if kind == "random":
                try:
                    seed = int(arg)
                except ValueError:
                    raise DomainError(f"random: expects an integer seed, got {arg!r}")
                return extract_digits(bits or DEFAULT_BITS, seed)
            if kind == "file":
                return cls.from_file(arg)
        if "/" in text:
            try:
                return cls.from_rational(Fraction(text))
            except (ValueError, ZeroDivisionError):
                pass
        raise DomainError(f"Unrecognised alpha expression {text!r}")

    @classmethod
    def from_file(cls, path: str) -> "PartialQuotients":
        """
        Read digits from a text file: either one comma/whitespace separated list
        or a CSV with a ``digit`` column as written by the ``digits`` command
        """
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise DomainError(f"Cannot read digit file {path}: {e}")
        lines = [line.strip() for line in raw.splitlines() if line.strip()]
        if lines and lines[0].split(",")[:2] == ["nu", "digit"]:
            digits = tuple(int(line.split(",")[1]) for line in lines[1:])
        else:
            digits, _ = cls.parse_digit_field(",".join(" ".join(lines).split()))
        return cls.explicit(digits, terminates=False, label=f"file:{path}")


def load_presets(path: Path = PRESETS_PATH) -> Dict[str, PartialQuotients]:
    """Named digit streams from data/alpha_presets.json"""
    return dict(_load_presets(str(path)))


@lru_cache(maxsize=4)
def _load_presets(path: str) -> Tuple[Tuple[str, PartialQuotients], ...]:
    try:
        with open(path, "r") as f:
            raw = json.load(f)
    except FileNotFoundError:
        logger.warning("Preset file %s not found; only built-in presets are available", path)
        raw = {"golden": {"block": [1]}, "silver": {"block": [2]}}
    presets = []
    for name, entry in raw.items():
        if "rule" in entry:
            pq = PartialQuotients.from_rule(entry["rule"], label=name)
        else:
            pq = PartialQuotients.periodic(entry.get("preamble", []), entry["block"], label=name)
        presets.append((name, pq))
    return tuple(presets)


@dataclass(frozen=True)
class ConvergentPair:
    nu: int
    p: int
    q: int


@dataclass(frozen=True)
class ReversedTail:
    """alpha*_nu = q_{nu-1}/q_nu = [0; a_nu, ..., a_1]"""

    nu: int
    value: Fraction


@dataclass(frozen=True)
class TailEnclosure:
    """
    Certified bracket lo <= alpha_nu <= hi for alpha_nu = [a_nu; a_{nu+1}, ...]

    ``depth`` is the number of digits after a_nu that went into the bracket.
    A point enclosure means the tail is known exactly.
    """

    nu: int
    lo: Fraction
    hi: Fraction
    depth: int

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def to_iv(self):
        if self.is_exact:
            return iv_from_rational(self.lo)
        return iv_hull(iv_from_rational(self.lo), iv_from_rational(self.hi))

    def reciprocal(self) -> RationalInterval:
        """Enclosure of 1/alpha_nu, inside (0, 1]"""
        return RationalInterval(1 / self.hi, 1 / self.lo)


@lru_cache(maxsize=16)
def convergent_table(pq: PartialQuotients, n: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """
    Numerators and denominators for nu = -1..n; index i holds nu = i - 1
    """
    if n < 0:
        raise DomainError(f"Convergent count must be >= 0, got {n}")
    digits = pq.digits(n)
    p = [1, 0]
    q = [0, 1]
    for a in digits:
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
    return tuple(p), tuple(q)


def denominators(pq: PartialQuotients, n: int) -> Tuple[int, ...]:
    """q_{-1}, q_0, ..., q_n"""
    return convergent_table(pq, n)[1]


def convergents(pq: PartialQuotients, n: int) -> List[ConvergentPair]:
    """Convergent pairs for nu = -1..n"""
    p, q = convergent_table(pq, n)
    return [ConvergentPair(nu=i - 1, p=p[i], q=q[i]) for i in range(len(q))]


def determinant(previous: ConvergentPair, current: ConvergentPair) -> int:
    """p_{nu-1} q_nu - p_nu q_{nu-1}; equals (-1)^nu"""
    return previous.p * current.q - current.p * previous.q


def reversed_tail(pq: PartialQuotients, nu: int) -> ReversedTail:
    if nu < 0:
        raise DomainError(f"Reversed tail index must be >= 0, got {nu}")
    q = denominators(pq, nu)
    return ReversedTail(nu=nu, value=Fraction(q[nu], q[nu + 1]))


def _tail_convergents(digits: Sequence[int]) -> Tuple[int, int, int, int]:
    """(h_m, h_{m-1}, k_m, k_{m-1}) for [b_0; b_1, ..., b_m]"""
    h_prev, h = 1, digits[0]
    k_prev, k = 0, 1
    for b in digits[1:]:
        h_prev, h = h, b * h + h_prev
        k_prev, k = k, b * k + k_prev
    return h, h_prev, k, k_prev


def convergent_bracket(digits: Sequence[int]) -> Tuple[Fraction, Fraction]:
    """(lo, hi) around [b_0; b_1, ..., b_m, x] for every real x >= 1"""
    h, h_prev, k, k_prev = _tail_convergents(digits)
    near, far = Fraction(h, k), Fraction(h + h_prev, k + k_prev)
    return (near, far) if near <= far else (far, near)


def tail_enclosure(pq: PartialQuotients, nu: int, depth: int) -> TailEnclosure:
    """
    Bracket alpha_nu between two consecutive convergents of [a_nu; ..., a_{nu+depth}]

    For a stream with a finite horizon the depth is clipped at the last known
    digit; a terminating stream gives its tails exactly.
    """
    if nu < 1:
        raise DomainError(f"Tail index must be >= 1, got {nu}")
    if depth < 0:
        raise DomainError(f"Tail depth must be >= 0, got {depth}")
    if not pq.has_digit(nu):
        pq.digit(nu)
    last = nu + depth
    exact = False
    if pq.length is not None and last >= pq.length:
        exact = pq.terminates
        last = pq.length
    digits = pq.digits(last)[nu - 1:] if pq.length is not None else tuple(
        pq.digit(i) for i in range(nu, last + 1)
    )
    if exact:
        h, _, k, _ = _tail_convergents(digits)
        return TailEnclosure(nu=nu, lo=Fraction(h, k), hi=Fraction(h, k), depth=last - nu)
    lo, hi = convergent_bracket(digits)
    return TailEnclosure(nu=nu, lo=lo, hi=hi, depth=last - nu)


def exact_tail(pq: PartialQuotients, nu: int) -> QuadraticSurd:
    """alpha_nu = [a_nu; a_{nu+1}, ...] as an exact surd, for a periodic stream"""
    if pq.source != "periodic":
        raise DomainError(f"Exact tails need a periodic stream, got {pq.source}")
    if nu < 1:
        raise DomainError(f"Tail index must be >= 1, got {nu}")
    block = pq.block
    if nu <= len(pq.preamble):
        preamble = pq.preamble[nu - 1:]
    else:
        shift = (nu - len(pq.preamble) - 1) % len(block)
        preamble, block = (), block[shift:] + block[:shift]
    return 1 / QuadraticSurd.periodic_value(preamble, block)


def reciprocal_tail(pq: PartialQuotients, nu: int, depth: int) -> RationalInterval:
    """
    Enclosure of 1/alpha_nu in [0, 1]; the point 0 stands for an infinite tail
    past the end of a terminating stream
    """
    if pq.terminates and pq.length is not None and nu > pq.length:
        return RationalInterval.point(0)
    return tail_enclosure(pq, nu, depth).reciprocal()


def rational_digits(x: Union[int, Fraction]) -> List[int]:
    """Digits of a rational in (0, 1] by exact Euclid"""
    x = Fraction(x)
    if not 0 < x <= 1:
        raise DomainError(f"Expected a rational in (0, 1], got {x}")
    num, den = x.numerator, x.denominator
    digits = []
    while num:
        a, rem = divmod(den, num)
        digits.append(a)
        den, num = num, rem
    return digits


def certified_prefix(lo: Fraction, hi: Fraction) -> List[int]:
    """
    Digits shared by every real in [lo, hi]

    Both ends are run through Euclid in lockstep; a digit is accepted only if
    the two ends produce it and neither end has hit an exact reciprocal.
    """
    lo, hi = Fraction(lo), Fraction(hi)
    if not 0 <= lo <= hi <= 1:
        raise DomainError(f"Expected 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
    n1, d1 = lo.numerator, lo.denominator
    n2, d2 = hi.numerator, hi.denominator
    digits = []
    while n1 and n2:
        a1, r1 = divmod(d1, n1)
        a2, r2 = divmod(d2, n2)
        if a1 != a2 or not r1 or not r2:
            break
        digits.append(a1)
        d1, n1 = n1, r1
        d2, n2 = n2, r2
    return digits


def dyadic_sample(bits: int, seed: int) -> Fraction:
    """A uniformly random multiple of 2^-bits in [0, 1) drawn from numpy's generator"""
    rng = np.random.default_rng(seed)
    n_bytes = (bits + 7) // 8
    k = int.from_bytes(rng.bytes(n_bytes), "big") >> (8 * n_bytes - bits)
    return Fraction(k, 1 << bits)


def extract_digits(bits: int, seed: int) -> PartialQuotients:
    """
    Certified digits of a random real drawn with ``bits`` random bits

    The sampled x and x + 2^-bits are expanded together and only their common
    prefix is kept, so every digit returned belongs to every real in between.
    """
    if bits < 64:
        raise DomainError(f"At least 64 random bits are required, got {bits}")
    lo = dyadic_sample(bits, seed)
    hi = lo + Fraction(1, 1 << bits)
    digits = certified_prefix(lo, hi)
    if not digits:
        raise InsufficientPrecisionError(
            f"No digit could be certified from {bits} bits with seed {seed}; retry with more bits"
        )
    logger.debug("seed %s: %d bits certified %d digits", seed, bits, len(digits))
    return PartialQuotients(
        source="random",
        preamble=tuple(digits),
        terminates=False,
        seed=seed,
        bits=bits,
        label=f"random:{seed}",
    )
