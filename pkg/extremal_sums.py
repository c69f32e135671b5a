import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import streamlit as st
from mpmath import iv

from utils.bound_checks import BoundCheck, at_most, below
from utils.config import Settings
from utils.continued_fractions import PartialQuotients, TailEnclosure, convergent_bracket, tail_enclosure
from utils.errors import (
    ContinuedFractionError,
    DomainError,
    InsufficientPrecisionError,
    PatternError,
)
from utils.interval_utils import (
    MeasuredValue,
    interval_precision,
    iv_from_rational,
    iv_hi,
    iv_hull,
    iv_lo,
    iv_sum,
)
from utils.plot_utils import StepPlot
from utils.surd_utils import QuadraticSurd

logger = logging.getLogger(__name__)

Real = Union[int, Fraction, QuadraticSurd]

# digits after nu that pin S_nu down for every continuation while constructing
FREEZE_WINDOW = 24
PRECISION_RETRIES = 3


def _to_real(x) -> Real:
    """Promote a float or string to an exact rational; surds pass through"""
    if isinstance(x, (QuadraticSurd, Fraction, int)) and not isinstance(x, bool):
        return x
    if isinstance(x, float):
        if math.isinf(x):
            return x
        return Fraction(x)
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        return Fraction(x.strip())
    raise DomainError(f"Cannot use {x!r} as a real number")


def _real_iv(x):
    if isinstance(x, QuadraticSurd):
        return x.to_iv()
    if hasattr(x, "_mpi_"):
        return x
    if isinstance(x, TailEnclosure):
        return x.to_iv()
    return iv_from_rational(x)


def _reciprocal_iv(tail):
    """1/tail as an interval; ``None`` or infinity is an infinite tail"""
    if tail is None or (isinstance(tail, float) and math.isinf(tail)):
        return iv.mpf(0)
    if isinstance(tail, TailEnclosure):
        return tail.reciprocal().to_iv()
    return 1 / _real_iv(tail)


def generalized_summands(coords: Sequence, tail=None) -> List:
    """
    S_1..S_m for real coordinates x_1..x_m followed by the tail alpha_{m+1}

    y_nu = 1/(x_nu + y_{nu-1}) runs forward from y_0 = 0, r_nu = 1/alpha_nu runs
    backward from the tail, and S_nu = (1 - y_nu)/(1 + r_{nu+1} y_nu).
    """
    m = len(coords)
    if m == 0:
        return []
    xs = [_real_iv(x) for x in coords]
    r = [None] * (m + 2)
    r[m + 1] = _reciprocal_iv(tail)
    for nu in range(m, 1, -1):
        r[nu] = 1 / (xs[nu - 1] + r[nu + 1])
    terms = []
    y = iv.mpf(0)
    for nu in range(1, m + 1):
        y = 1 / (xs[nu - 1] + y)
        terms.append((1 - y) / (1 + r[nu + 1] * y))
    return terms


def generalized_sum(coords: Sequence, tail=None):
    return iv_sum(generalized_summands(coords, tail))


@dataclass(frozen=True)
class BlockSpec:
    """Alternating runs of a's and b's, starting with a"""

    a: int
    b: int
    block_lengths: Tuple[int, ...] = ()
    constant: bool = False

    def __post_init__(self):
        object.__setattr__(self, "block_lengths", tuple(int(n) for n in self.block_lengths))
        if any(n < 1 for n in self.block_lengths):
            raise DomainError("Every block must be non-empty")

    @property
    def W(self) -> Tuple[int, ...]:
        total, out = 0, []
        for n in self.block_lengths:
            total += n
            out.append(total)
        return tuple(out)

    @property
    def M(self) -> int:
        return max(self.block_lengths, default=0)

    def digits(self) -> List[int]:
        out = []
        for k, n in enumerate(self.block_lengths):
            out.extend([self.a if k % 2 == 0 else self.b] * n)
        return out

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "constant": self.constant,
            "block_lengths": list(self.block_lengths),
            "W": list(self.W),
            "M": self.M,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class Construction:
    """A constructed digit prefix with its block layout and certified summands"""

    d: Real
    digits: PartialQuotients
    spec: Optional[BlockSpec]
    summands: List = field(default_factory=list, repr=False)

    def certified_sums(self) -> List:
        """G_0..G_k for every k the stored summands cover"""
        sums = [iv.mpf(0)]
        for term in self.summands:
            sums.append(sums[-1] + term)
        return sums


class ExtremalSums:
    """Closed-form S(z), the extremal inequalities for G_n and the prescribed-average constructor"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings.from_env()

    # S(z)

    @staticmethod
    def S_closed(z) -> QuadraticSurd:
        """
        Limit of G_n/n for the constant stream (z, z, ...):
        S(z) = (1 - alpha)(z + alpha)/(z + 2 alpha) with alpha = (sqrt(z^2 + 4) - z)/2
        """
        z = _to_real(z)
        if isinstance(z, float):
            return QuadraticSurd(1)
        if isinstance(z, QuadraticSurd):
            raise DomainError("S(z) is only kept exact for rational z")
        if z < 1:
            raise DomainError(f"S(z) needs z >= 1, got {z}")
        alpha = QuadraticSurd.constant_stream_value(z)
        return (1 - alpha) * (z + alpha) / (z + 2 * alpha)

    def S_measured(self, z) -> MeasuredValue:
        with interval_precision(self.settings.interval_prec):
            return self.S_closed(z).to_measured()

    def golden_integral_ratio(self) -> MeasuredValue:
        """lim I/ln t for the golden ratio: S(1) / ln((1 + sqrt 5)/2)"""
        with interval_precision(self.settings.interval_prec):
            phi = (1 + iv.sqrt(5)) / 2
            return MeasuredValue.from_interval(self.S_closed(1).to_iv() / iv.log(phi))

    # sums with a real last argument

    def sum_with_tail(self, pq: PartialQuotients, n: int, x=None) -> MeasuredValue:
        """G_n(alpha, x): digits a_1..a_n of alpha, then alpha_{n+1} = x (None for infinity)"""
        if isinstance(x, (str, float)):
            x = _to_real(x)
        with interval_precision(self.settings.interval_prec):
            return MeasuredValue.from_interval(generalized_sum(pq.digits(n), x))

    def sum_band(self, pq: PartialQuotients, n: int) -> Tuple[MeasuredValue, MeasuredValue]:
        """(G_n(alpha, 1), G_n(alpha, inf)); every continuation of a_1..a_n lands in between"""
        return self.sum_with_tail(pq, n, 1), self.sum_with_tail(pq, n, None)

    def _tail(self, pq: PartialQuotients, nu: int):
        """Enclosure of alpha_nu, or None when it is infinite"""
        if pq.terminates and nu > pq.length:
            return None
        return tail_enclosure(pq, nu, self.settings.tail_depth)

    def _stream_sum(self, pq: PartialQuotients, n: int):
        """G_n of a digit stream with the tail alpha_{n+1} enclosed"""
        if n == 0:
            return iv.mpf(0)
        if pq.terminates:
            # the measure function vanishes past the last denominator
            n = min(n, pq.length)
        return generalized_sum(pq.digits(n), self._tail(pq, n + 1))

    # inequality checks

    def check_constant_stream(self, z, n: int) -> BoundCheck:
        """max over m <= n of |G_m(z, z, ...) - S(z) m|, which stays at most 4"""
        z = _to_real(z)
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        with interval_precision(self.settings.interval_prec):
            S = self.S_closed(z).to_iv()
            zi = iv_from_rational(z)
            r = QuadraticSurd.constant_stream_value(z).to_iv()
            y = iv.mpf(0)
            G = iv.mpf(0)
            worst = iv.mpf(0)
            for m in range(1, n + 1):
                y = 1 / (zi + y)
                G = G + (1 - y) / (1 + r * y)
                deviation = abs(G - S * m)
                if iv_hi(deviation) > iv_hi(worst):
                    worst = deviation
            observed = MeasuredValue.from_interval(worst)
        logger.info("constant stream z=%s n=%d: max deviation %s", z, n, observed)
        return at_most("constant-stream deviation", observed, 4, z=str(z), n=n)

    def check_prefix_insensitivity(self, x: PartialQuotients, y: PartialQuotients, n: int) -> BoundCheck:
        """
        |G_n(x) - G_n(y)| for two streams that share digits 1..n+1 (bound 1)
        or differ only in the first digit (bound 8)
        """
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        depth = self.settings.tail_depth
        span = n + 1 + depth
        dx = x.digits(x.available(span))
        dy = y.digits(y.available(span))
        common = min(len(dx), len(dy))
        if common < n + 1:
            raise PatternError(f"Both streams need at least {n + 1} digits")
        if dx[: n + 1] == dy[: n + 1]:
            name, bound = "shared-prefix deviation", 1
        elif dx[0] != dy[0] and dx[1:common] == dy[1:common] and len(dx) == len(dy):
            name, bound = "first-digit deviation", 8
        else:
            raise PatternError("Streams neither share their first n+1 digits nor differ only in the first digit")
        # the streams may still differ past the span
        with interval_precision(self.settings.interval_prec):
            observed = MeasuredValue.from_interval(abs(self._stream_sum(x, n) - self._stream_sum(y, n)))
        return below(name, observed, bound, x=x.serialize(span), y=y.serialize(span), n=n)

    def check_append(self, pq: PartialQuotients, x, y, n: int) -> BoundCheck:
        """|G_{n-1}(alpha, x) - G_n(alpha, y)| < 3 for tails x, y in (1, inf]"""
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        x, y = _to_real(x), _to_real(y)
        for tail in (x, y):
            if not isinstance(tail, float) and tail < 1:
                raise DomainError(f"Tails must be >= 1, got {tail}")
        digits = pq.digits(n)
        with interval_precision(self.settings.interval_prec):
            before = generalized_sum(digits[:-1], x)
            after = generalized_sum(digits, y)
            observed = MeasuredValue.from_interval(abs(before - after))
        return below("append deviation", observed, 3, alpha=pq.serialize(n), x=str(x), y=str(y), n=n)

    def check_single_substitution(self, first: int, z: int, n: int) -> BoundCheck:
        """|G_n - S(z) n| < 13 for the stream (first, z, z, ...)"""
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        with interval_precision(self.settings.interval_prec):
            tail = iv.mpf([z, z + 1])
            G = generalized_sum([first] + [z] * (n - 1), tail)
            observed = MeasuredValue.from_interval(abs(G - self.S_closed(z).to_iv() * n))
        return below("single-substitution deviation", observed, 13, first=first, z=z, n=n)

    def check_all_ones_minimality(self, pq: PartialQuotients, n: int) -> BoundCheck:
        """G_n(x) >= G_n(1, ..., 1, x_{n+2}, ...) with the first n+1 digits replaced by 1"""
        digits = pq.digits(n + 1)
        ones = (1,) * (n + 1)
        if digits == ones:
            observed = MeasuredValue.exact(0)
        else:
            with interval_precision(self.settings.interval_prec):
                tail = self._point_tail(pq, n + 2)
                observed = MeasuredValue.from_interval(sum_first(ones, tail, n) - sum_first(digits, tail, n))
        return at_most("all-ones minimality", observed, 0, alpha=pq.serialize(n + 1), n=n)

    def _point_tail(self, pq: PartialQuotients, nu: int):
        """A fixed rational stand-in for alpha_nu (infinite past a terminating end)"""
        tail = self._tail(pq, nu)
        return None if tail is None else tail.lo

    def check_ratio_bounds(self, pq: PartialQuotients, n0: int, n1: int) -> List[BoundCheck]:
        """On n0 <= n <= n1: G_n/n >= S(1) - 5/n0 and G_n/n < 1"""
        if not 1 <= n0 <= n1:
            raise DomainError(f"Need 1 <= n0 <= n1, got {n0}, {n1}")
        with interval_precision(self.settings.interval_prec):
            terms = generalized_summands(pq.digits(n1), self._tail(pq, n1 + 1))
            floor = self.S_closed(1).to_iv() - iv_from_rational(Fraction(5, n0))
            G = iv.mpf(0)
            lowest_gap = None
            highest = None
            for m, term in enumerate(terms, start=1):
                G = G + term
                if m < n0:
                    continue
                ratio = G / m
                gap = floor - ratio
                if lowest_gap is None or iv_hi(gap) > iv_hi(lowest_gap):
                    lowest_gap = gap
                if highest is None or iv_hi(ratio) > iv_hi(highest):
                    highest = ratio
            params = dict(alpha=pq.serialize(n1 + 1), n0=n0, n1=n1)
            return [
                below("S(1) - 5/n0 - G_n/n < 0", MeasuredValue.from_interval(lowest_gap), 0, **params),
                below("G_n/n < 1", MeasuredValue.from_interval(highest), 1, **params),
            ]

    def check_infinite_tail_identity(self, pq: PartialQuotients, n: int) -> BoundCheck:
        """G_n(alpha, inf) = G_{n-1}(alpha, a_n) + (1 - alpha*_n), to rounding"""
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        digits = pq.digits(n)
        with interval_precision(self.settings.interval_prec):
            lhs = generalized_sum(digits, None)
            rhs = generalized_sum(digits[:-1], digits[-1])
            y = iv.mpf(0)
            for a in digits:
                y = 1 / (a + y)
            observed = MeasuredValue.from_interval(abs(lhs - rhs - (1 - y)))
        return below("infinite-tail identity residual", observed, Fraction(1, 10**20), alpha=pq.serialize(n), n=n)

    def check_monotonicity(self, pq: PartialQuotients, k: int, n: int, delta=1, value=None) -> int:
        """
        Sign of G_n(x_k = v + delta) - G_n(x_k = v) for coordinate k <= n + 1,
        where v defaults to the digit a_k; precision is raised until the sign is certain
        """
        if k < 1 or k > n + 1:
            raise DomainError(f"Coordinate {k} is outside 1..n+1 = 1..{n + 1}")
        delta = _to_real(delta)
        if delta <= 0:
            raise DomainError("delta must be positive")
        coords: List = list(pq.digits(n + 1))
        base = _to_real(value) if value is not None else coords[k - 1]
        tail = self._point_tail(pq, n + 2)
        low = list(coords)
        high = list(coords)
        low[k - 1] = base
        high[k - 1] = base + delta
        prec = self.settings.interval_prec
        for attempt in range(PRECISION_RETRIES + 1):
            with interval_precision(prec):
                diff = sum_first(high, tail, n) - sum_first(low, tail, n)
                if iv_lo(diff) > 0:
                    return 1
                if iv_hi(diff) < 0:
                    return -1
            logger.debug("monotonicity k=%d n=%d inconclusive at %d bits", k, n, prec)
            prec *= 2
        raise InsufficientPrecisionError(
            f"Finite difference at coordinate {k} stays inside the rounding error at {prec // 2} bits"
        )

    # prescribed average

    def choose_digits(self, d) -> Tuple[int, bool]:
        """The largest a with S(a) <= d, and whether S(a) == d exactly"""
        low, high = 1, 2
        while self.S_closed(high) <= d:
            low, high = high, high * 2
        while high - low > 1:
            mid = (low + high) // 2
            if self.S_closed(mid) <= d:
                low = mid
            else:
                high = mid
        return low, self.S_closed(low) == d

    def construct_alpha(self, d, n_digits: int = 100_000, window: int = FREEZE_WINDOW) -> Construction:
        """
        Digits whose running average G_n/n tends to d

        Runs of a = max{z : S(z) <= d} alternate with runs of b = a + 1. A run
        of a's ends once G_n(alpha, x)/n < d for every continuation x, a run of
        b's once it is > d for every continuation.

        Two degenerate targets skip the blocks. d = 1 gives the increasing
        stream 1, 2, 3, ... (``spec`` is None). When d equals S(a) exactly, as
        d = 1/2 = S(2) does, the constant stream a, a, ... already has
        G_n/n within 4/n of d, so it is returned with a ``constant`` BlockSpec
        and no block lengths.
        """
        d = _to_real(d)
        if isinstance(d, float):
            raise DomainError("d must be finite")
        if d < self.S_closed(1) or d > 1:
            raise DomainError(f"d must lie in [S(1), 1] = [{self.S_closed(1)}, 1], got {d}")
        if d == 1:
            return Construction(d=d, digits=PartialQuotients.from_rule("increasing"), spec=None)
        a, exact = self.choose_digits(d)
        if exact:
            logger.info("d = S(%d) exactly; the constant stream %d attains it", a, a)
            return Construction(
                d=d,
                digits=PartialQuotients.periodic((), (a,), label=f"constant {a}"),
                spec=BlockSpec(a=a, b=a + 1, constant=True),
            )
        with interval_precision(self.settings.interval_prec):
            builder = _BlockBuilder(d, a, a + 1, window)
            builder.extend(n_digits + window)
        spec = BlockSpec(a=a, b=a + 1, block_lengths=builder.block_lengths())
        logger.info("constructed %d digits for d=%s: %d blocks, M=%d", len(builder.digits),
                    d, len(spec.block_lengths), spec.M)
        return Construction(
            d=d,
            digits=PartialQuotients.constructed(builder.digits, label=f"construct:{d}"),
            spec=spec,
            summands=builder.final_summands(),
        )

    def check_construction(self, construction: Construction, checkpoints: Iterable[int]) -> List[BoundCheck]:
        """|G_n/n - d| < (M+3)/(n-M) at each checkpoint n > M (4/n for a constant stream)"""
        spec = construction.spec
        d = construction.d
        checks = []
        with interval_precision(self.settings.interval_prec):
            d_iv = _real_iv(d)
            if spec is None or spec.constant:
                pq = construction.digits
                for n in checkpoints:
                    G = self._stream_sum(pq, n)
                    if spec is None:
                        observed = MeasuredValue.from_interval(G / n)
                        checks.append(below("G_n/n < 1", observed, 1, n=n))
                        continue
                    observed = MeasuredValue.from_interval(abs(G / n - d_iv))
                    checks.append(at_most("constant-stream envelope", observed, Fraction(4, n), n=n))
                return checks
            sums = construction.certified_sums()
            M = spec.M
            for n in checkpoints:
                if n <= M:
                    continue
                if n >= len(sums):
                    raise DomainError(f"Checkpoint {n} is past the constructed horizon {len(sums) - 1}")
                observed = MeasuredValue.from_interval(abs(sums[n] / n - d_iv))
                checks.append(below("construction envelope", observed, Fraction(M + 3, n - M), n=n, M=M))
        return checks

    def construction_ratio(self, construction: Construction, n: int) -> MeasuredValue:
        """Certified G_n/n of a construction"""
        with interval_precision(self.settings.interval_prec):
            if construction.spec is None or construction.spec.constant:
                return MeasuredValue.from_interval(self._stream_sum(construction.digits, n) / n)
            return MeasuredValue.from_interval(construction.certified_sums()[n] / n)

    def render_interface(self):
        """Render the Streamlit page for S(z) and the constructor"""
        st.header("📐 Extremal Sums")
        st.markdown("Closed-form S(z), the inequalities for G_n and numbers with a prescribed average G_n/n → d.")

        tab1, tab2 = st.tabs(["S(z)", "Construct α"])
        with tab1:
            z_text = st.text_input("z (rational ≥ 1 or inf)", value="2")
            if st.button("Compute S(z)"):
                try:
                    S = self.S_closed(z_text)
                    st.success(f"S({z_text}) = {S} ≈ {float(S):.10f}")
                except (ContinuedFractionError, ValueError, ZeroDivisionError) as e:
                    st.error(f"Could not compute S(z): {e}")

        with tab2:
            col1, col2 = st.columns(2)
            with col1:
                d_text = st.text_input("Target d", value="2/5")
            with col2:
                n_digits = st.number_input("Digits", min_value=100, max_value=200_000, value=5000, step=100)
            if st.button("🏗️ Construct"):
                try:
                    with st.spinner("Building blocks..."):
                        construction = self.construct_alpha(d_text, int(n_digits))
                    spec = construction.spec
                    if spec is None:
                        st.info("d = 1: digits a_ν = ν")
                        return
                    st.success(f"a = {spec.a}, b = {spec.b}, {len(spec.block_lengths)} blocks, M = {spec.M}")
                    if not spec.constant:
                        sums = construction.certified_sums()
                        step = max(1, int(n_digits) // 500)
                        ns = list(range(step, int(n_digits) + 1, step))
                        plot = StepPlot(title=f"G_n/n for d = {d_text}", x_label="n", y_label="G_n/n")
                        plot.add_line("G_n/n", ns, [float(sums[n].mid) / n for n in ns])
                        plot.add_guide("d", float(Fraction(d_text)))
                        st.pyplot(plot.figure())
                    st.download_button("📥 Block layout (JSON)", spec.to_json(), file_name="blocks.json")
                except (ContinuedFractionError, ValueError, ZeroDivisionError) as e:
                    st.error(f"Construction failed: {e}")


def sum_first(coords: Sequence, tail, n: int):
    """G_n for coordinates x_1..x_m (m >= n) followed by ``tail``"""
    total = iv.mpf(0)
    for term in generalized_summands(coords, tail)[:n]:
        total = total + term
    return total


class _BlockBuilder:
    """
    Appends digits run by run. Summands more than ``window`` places behind the
    end are frozen with an enclosure valid for any continuation; the last
    ``window`` are recomputed for tails 1 and infinity at each crossing test.
    """

    def __init__(self, d: Real, a: int, b: int, window: int):
        self.d = d
        self.d_iv = _real_iv(d)
        self.d_float = float(d)
        self.a, self.b = a, b
        self.window = window
        self.digits: List[int] = []
        self.y_iv = [iv.mpf(0)]
        self.y_float = [0.0]
        self.frozen: List = []
        self.frozen_iv = iv.mpf(0)
        self.frozen_float = 0.0
        self.boundaries: List[int] = []
        self.phase_is_a = True

    def _append(self, digit: int):
        self.digits.append(digit)
        self.y_iv.append(1 / (digit + self.y_iv[-1]))
        self.y_float.append(1.0 / (digit + self.y_float[-1]))
        n = len(self.digits)
        nu = n - self.window
        if nu >= 1:
            term = self._frozen_term(nu)
            self.frozen.append(term)
            self.frozen_iv = self.frozen_iv + term
            self.frozen_float += float(term.mid)

    def _frozen_term(self, nu: int):
        # alpha_{nu+1} bracketed by [a_{nu+1}; ..., a_{nu+window}]
        return self._summand(nu, self.digits[nu: nu + self.window])

    def _summand(self, nu: int, tail_digits: Sequence[int]):
        lo, hi = convergent_bracket(tail_digits)
        r = iv_hull(iv_from_rational(1 / hi), iv_from_rational(1 / lo))
        y = self.y_iv[nu]
        return (1 - y) / (1 + r * y)

    def _window_float(self, r_end: float) -> float:
        n = len(self.digits)
        start = max(1, n - self.window + 1)
        r = r_end
        total = 0.0
        for nu in range(n, start - 1, -1):
            y = self.y_float[nu]
            total += (1 - y) / (1 + r * y)
            r = 1.0 / (self.digits[nu - 1] + r)
        return total

    def _window_iv(self, r_end):
        n = len(self.digits)
        start = max(1, n - self.window + 1)
        r = r_end
        total = iv.mpf(0)
        for nu in range(n, start - 1, -1):
            y = self.y_iv[nu]
            total = total + (1 - y) / (1 + r * y)
            r = 1 / (self.digits[nu - 1] + r)
        return total

    def _crossed(self) -> bool:
        n = len(self.digits)
        target_float = self.d_float * n
        if self.phase_is_a:
            # every continuation must already be below d
            if self.frozen_float + self._window_float(0.0) >= target_float:
                return False
            upper = self.frozen_iv + self._window_iv(iv.mpf(0))
            return iv_hi(upper) < iv_lo(self.d_iv * n)
        if self.frozen_float + self._window_float(1.0) <= target_float:
            return False
        lower = self.frozen_iv + self._window_iv(iv.mpf(1))
        return iv_lo(lower) > iv_hi(self.d_iv * n)

    def extend(self, total: int):
        while len(self.digits) < total:
            self._append(self.a if self.phase_is_a else self.b)
            if self._crossed():
                self.boundaries.append(len(self.digits))
                logger.debug("block ends at n=%d (%s-run)", len(self.digits), "a" if self.phase_is_a else "b")
                self.phase_is_a = not self.phase_is_a

    def block_lengths(self) -> Tuple[int, ...]:
        edges = [0] + self.boundaries
        lengths = [hi - lo for lo, hi in zip(edges, edges[1:])]
        tail = len(self.digits) - edges[-1]
        if tail:
            lengths.append(tail)
        return tuple(lengths)

    def final_summands(self) -> List:
        """Frozen summands plus the last ones bracketed by whatever digits remain"""
        terms = list(self.frozen)
        n = len(self.digits)
        for nu in range(len(terms) + 1, n):
            terms.append(self._summand(nu, self.digits[nu:]))
        return terms
