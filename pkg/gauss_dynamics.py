import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Union

import streamlit as st
from mpmath import iv

from utils.bound_checks import BoundCheck, below
from utils.config import DEFAULT_INTERVAL_PREC, Settings
from utils.continued_fractions import PartialQuotients, convergent_table, reciprocal_tail
from utils.errors import ContinuedFractionError, DomainError, InsufficientPrecisionError
from utils.interval_utils import (
    MeasuredValue,
    RationalInterval,
    format_lower,
    format_upper,
    interval_precision,
    iv_from_rational,
    iv_hi,
    iv_hull,
    iv_lo,
    iv_sum,
)
from utils.plot_utils import StepPlot

logger = logging.getLogger(__name__)

ORBIT_HEADER = ["nu", "x_lo", "x_hi", "y_num", "y_den", "f_lo", "f_hi"]


def levy_constant():
    """pi^2 / (12 ln 2) as an interval"""
    return iv.pi ** 2 / (12 * iv.log(2))


def _as_interval(x: Union[int, Fraction, RationalInterval]) -> RationalInterval:
    if isinstance(x, RationalInterval):
        return x
    return RationalInterval.point(Fraction(x))


def _shift_digit(x: RationalInterval) -> int:
    """floor(1/x) when every point of x shares it"""
    if x.lo <= 0:
        raise InsufficientPrecisionError(f"Enclosure {x} touches 0; supply more digits or a tighter bracket")
    top = math.floor(1 / x.lo)
    bottom = math.floor(1 / x.hi)
    if top != bottom or (not x.is_point and 1 / x.lo == top):
        raise InsufficientPrecisionError(
            f"Enclosure {x} straddles 1/{top}; the next digit is ambiguous, retry with a deeper bracket"
        )
    return bottom


def gauss_step(x) -> RationalInterval:
    """
    The Gauss map Tx = {1/x} with T0 = 0, on an exact rational enclosure
    """
    x = _as_interval(x)
    if x.lo < 0 or x.hi >= 1:
        raise DomainError(f"Gauss map needs x in [0, 1), got {x}")
    if x.is_point and x.lo == 0:
        return RationalInterval.point(0)
    k = _shift_digit(x)
    return RationalInterval(1 / x.hi - k, 1 / x.lo - k)


@dataclass(frozen=True)
class OrbitPoint:
    """(x, y) after ``nu`` steps of the natural extension; y stays an exact rational"""

    nu: int
    x: RationalInterval
    y: Fraction

    def __post_init__(self):
        if not 0 <= self.y <= 1:
            raise DomainError(f"y must lie in [0, 1], got {self.y}")


def natural_extension_step(point: OrbitPoint) -> OrbitPoint:
    """(x, y) -> ({1/x}, 1/(floor(1/x) + y)); points with x = 0 stay put"""
    x = point.x
    if x.is_point and x.lo == 0:
        return OrbitPoint(nu=point.nu + 1, x=x, y=point.y)
    k = _shift_digit(x)
    return OrbitPoint(
        nu=point.nu + 1,
        x=RationalInterval(1 / x.hi - k, 1 / x.lo - k),
        y=1 / (k + point.y),
    )


def f_enclosure(x: RationalInterval, y: Fraction):
    """f(x, y) = (1 - y)/(1 + x y) over the x enclosure; decreasing in x"""
    yi = iv_from_rational(y)
    low = (1 - yi) / (1 + iv_from_rational(x.hi) * yi)
    high = (1 - yi) / (1 + iv_from_rational(x.lo) * yi)
    return iv_hull(low, high)


@dataclass
class BirkhoffAccumulator:
    """Running sum of f along an orbit"""

    n: int = 0
    sum: MeasuredValue = field(default_factory=lambda: MeasuredValue.exact(0))

    def add(self, value: MeasuredValue):
        self.n += 1
        self.sum = self.sum + value

    @property
    def mean(self) -> MeasuredValue:
        if self.n == 0:
            raise DomainError("Mean of an empty orbit segment")
        return self.sum.divided(self.n)


class GaussDynamics:
    """Orbits of the Gauss map and its natural extension, Birkhoff sums and the invariant measures"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings.from_env()

    def _x(self, pq: PartialQuotients, nu: int) -> RationalInterval:
        # T^nu x = 1/alpha_{nu+1}
        return reciprocal_tail(pq, nu + 1, self.settings.tail_depth)

    def _last_step(self, pq: PartialQuotients, n: int) -> int:
        if pq.terminates:
            return min(n, pq.length)
        return n

    def orbit_via_convergents(self, pq: PartialQuotients, y0=0, n: int = 0) -> List[OrbitPoint]:
        """
        Points nu = 0..n of the orbit of (alpha, y0) in closed form:
        y_nu = (q_{nu-1} + y0 p_{nu-1}) / (q_nu + y0 p_nu)
        """
        y0 = Fraction(y0)
        if not 0 <= y0 <= 1:
            raise DomainError(f"y0 must lie in [0, 1], got {y0}")
        if n < 0:
            raise DomainError(f"Orbit length must be >= 0, got {n}")
        last = self._last_step(pq, n)
        p, q = convergent_table(pq, last)
        points = []
        for nu in range(n + 1):
            k = min(nu, last)
            # index i of the table holds nu = i - 1
            y = Fraction(q[k] + y0 * p[k], q[k + 1] + y0 * p[k + 1]) if k else y0
            points.append(OrbitPoint(nu=nu, x=self._x(pq, k), y=y))
        return points

    def orbit_by_steps(self, pq: PartialQuotients, y0=0, n: int = 0, depth: Optional[int] = None) -> List[OrbitPoint]:
        """
        The same orbit by iterating natural_extension_step from (alpha, y0)

        Each step widens the x enclosure, so the starting bracket uses n extra digits by default.
        """
        if depth is None:
            depth = n + self.settings.tail_depth
        point = OrbitPoint(nu=0, x=reciprocal_tail(pq, 1, depth), y=Fraction(y0))
        points = [point]
        for _ in range(n):
            point = natural_extension_step(point)
            points.append(point)
        return points

    def f_terms(self, pq: PartialQuotients, y0, n: int) -> List:
        """f(T^nu(alpha, y0)) for nu = 1..n as intervals"""
        y0 = Fraction(y0)
        if not 0 <= y0 <= 1:
            raise DomainError(f"y0 must lie in [0, 1], got {y0}")
        last = self._last_step(pq, n)
        p, q = convergent_table(pq, last)
        r, s = y0.numerator, y0.denominator
        terms = []
        for nu in range(1, n + 1):
            k = min(nu, last)
            y = iv.mpf(s * q[k] + r * p[k]) / iv.mpf(s * q[k + 1] + r * p[k + 1])
            x = self._x(pq, k).to_iv()
            terms.append((1 - y) / (1 + x * y))
        return terms

    def birkhoff_mean_f(self, pq: PartialQuotients, y0=0, n: int = 1) -> BirkhoffAccumulator:
        """Mean of f(x, y) = (1 - y)/(1 + x y) over nu = 1..n; for y0 = 0 the sum is G_n"""
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        accumulator = BirkhoffAccumulator()
        with interval_precision(self.settings.interval_prec):
            for term in self.f_terms(pq, y0, n):
                accumulator.add(MeasuredValue.from_interval(term))
        logger.debug("Birkhoff mean over %d steps from y0=%s: %s", n, y0, accumulator.mean)
        return accumulator

    def check_initial_y_insensitivity(self, pq: PartialQuotients, y0, n: int) -> BoundCheck:
        """sum over nu <= n of |f(T^nu(alpha, y0)) - f(T^nu(alpha, 0))| < 4"""
        with interval_precision(self.settings.interval_prec):
            moved = self.f_terms(pq, y0, n)
            base = self.f_terms(pq, 0, n)
            observed = MeasuredValue.from_interval(iv_sum(abs(a - b) for a, b in zip(moved, base)))
        return below("initial-y insensitivity sum", observed, 4, y0=str(y0), n=n)

    def orbit_rows(self, pq: PartialQuotients, y0=0, n: int = 10) -> List[Dict[str, str]]:
        rows = []
        with interval_precision(self.settings.interval_prec):
            for point in self.orbit_via_convergents(pq, y0, n):
                f = f_enclosure(point.x, point.y)
                rows.append({
                    "nu": str(point.nu),
                    "x_lo": format_lower(point.x.lo),
                    "x_hi": format_upper(point.x.hi),
                    "y_num": str(point.y.numerator),
                    "y_den": str(point.y.denominator),
                    "f_lo": format_lower(f),
                    "f_hi": format_upper(f),
                })
        return rows

    @staticmethod
    def levy_ratio(pq: PartialQuotients, n: int) -> MeasuredValue:
        """(ln q_n)/n with q_n exact"""
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        q_n = convergent_table(pq, n)[1][n + 1]
        return MeasuredValue.from_interval(iv.log(iv.mpf(q_n)) / n)

    @staticmethod
    def gauss_measure(a, b):
        """mu([a, b]) = log2((1 + b)/(1 + a)) for 0 <= a <= b <= 1"""
        a, b = Fraction(a), Fraction(b)
        if not 0 <= a <= b <= 1:
            raise DomainError(f"Need 0 <= a <= b <= 1, got [{a}, {b}]")
        return iv.log(iv_from_rational((1 + b) / (1 + a))) / iv.log(2)

    def check_gauss_invariance(self, a, b, terms: int = 1000) -> MeasuredValue:
        """
        mu(T^-1 [a, b]) - mu([a, b]); the preimage is the union over k of
        [1/(k + b), 1/(k + a)], summed to ``terms`` with the rest bounded by (b - a)/(terms ln 2)
        """
        a, b = Fraction(a), Fraction(b)
        with interval_precision(self.settings.interval_prec):
            total = iv.mpf(0)
            for k in range(1, terms + 1):
                total = total + self.gauss_measure(Fraction(1, k + b), Fraction(1, k + a))
            rest = iv_from_rational(b - a) / (terms * iv.log(2))
            total = total + iv_hull(iv.mpf(0), rest)
            return MeasuredValue.from_interval(total - self.gauss_measure(a, b))

    @staticmethod
    def gauss_density_integrals(resolution: int = 2 ** 12, prec: int = DEFAULT_INTERVAL_PREC):
        """
        Certified enclosures of
        (i)  the integral of (1 - y)/(1 + x y)^3 over the unit square, which is ln2/2
        (ii) the integral of 1/(ln2 (1 + x y)^2), which is 1

        The x integral is done in closed form, leaving
        (1 - y)(2 + y)/(2 (1 + y)^2) = 1/u^2 + 1/(2u) - 1/2 and 1/u with u = 1 + y.
        Both are convex on [0, 1], so the midpoint rule is a lower bound and the
        trapezoid rule an upper bound. Nodes are exact rationals and every sum is
        outward rounded.
        """
        if resolution < 2:
            raise DomainError(f"Resolution must be >= 2, got {resolution}")

        def cubic(u):
            return 1 / u ** 2 + 1 / (2 * u) - iv.mpf(0.5)

        def square(u):
            return 1 / (u * iv.log(2))

        with interval_precision(prec):
            h = iv_from_rational(Fraction(1, resolution))
            mids = [iv_from_rational(1 + Fraction(2 * k + 1, 2 * resolution)) for k in range(resolution)]
            nodes = [iv_from_rational(1 + Fraction(k, resolution)) for k in range(resolution + 1)]
            results = []
            for fn in (cubic, square):
                lower = h * iv_sum(fn(u) for u in mids)
                ends = (fn(nodes[0]) + fn(nodes[-1])) / 2
                upper = h * (iv_sum(fn(u) for u in nodes[1:-1]) + ends)
                results.append(MeasuredValue.from_interval(iv_hull(iv_lo(lower), iv_hi(upper))))
        logger.info("quadrature at %d: (i) %s, (ii) %s", resolution, results[0], results[1])
        return results[0], results[1]

    def render_interface(self):
        """Render the Streamlit page for orbits and Birkhoff means"""
        st.header("🌀 Gauss Dynamics")
        st.markdown("Orbits of T̂(x, y) = ({1/x}, 1/(⌊1/x⌋ + y)) and the mean of f(x, y) = (1 − y)/(1 + xy).")

        col1, col2, col3 = st.columns(3)
        with col1:
            alpha_text = st.text_input("α", value="random:1")
        with col2:
            y0_text = st.text_input("y₀", value="0")
        with col3:
            n = st.number_input("Steps", min_value=1, max_value=20_000, value=1000)

        if st.button("▶️ Run orbit"):
            try:
                pq = PartialQuotients.parse(alpha_text)
                y0 = Fraction(y0_text)
                with interval_precision(self.settings.interval_prec):
                    terms = self.f_terms(pq, y0, int(n))
                running, means = iv.mpf(0), []
                for k, term in enumerate(terms, start=1):
                    running = running + term
                    means.append(float(running.mid) / k)
                st.success(f"Mean of f over {int(n)} steps ≈ {means[-1]:.6f} (limit 1/2 for almost every α)")
                plot = StepPlot(title="Running mean of f", x_label="n", y_label="mean")
                plot.add_line("mean", list(range(1, len(means) + 1)), means)
                plot.add_guide("1/2", 0.5)
                st.pyplot(plot.figure())
                with st.expander("Orbit (first 20 points)"):
                    st.dataframe(self.orbit_rows(pq, y0, min(20, int(n))))
                ratio = self.levy_ratio(pq, int(n))
                st.info(f"(ln q_n)/n = {float(ratio):.6f}; π²/(12 ln 2) ≈ 1.186569")
            except (ContinuedFractionError, ValueError, ZeroDivisionError) as e:
                st.error(f"Orbit failed: {e}")

        if st.button("∫ Quadrature"):
            with st.spinner("Integrating..."):
                first, second = self.gauss_density_integrals()
            st.write(f"∫∫ (1−y)/(1+xy)³ ∈ [{format_lower(first.lo)}, {format_upper(first.hi)}] (ln2/2 ≈ 0.3465736)")
            st.write(f"∫∫ dx dy/(ln2 (1+xy)²) ∈ [{format_lower(second.lo)}, {format_upper(second.hi)}]")
