import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Union

import streamlit as st
from mpmath import iv

from utils.bound_checks import BoundCheck, at_most, below
from utils.config import Settings
from utils.continued_fractions import (
    PartialQuotients,
    convergent_table,
    exact_tail,
    reciprocal_tail,
    tail_enclosure,
)
from utils.errors import ContinuedFractionError, DomainError, NeedsMoreDigitsError
from utils.interval_utils import (
    MeasuredValue,
    format_lower,
    format_upper,
    interval_precision,
    iv_from_rational,
    iv_hi,
)
from utils.plot_utils import StepPlot

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

INTEGRAL_TRACE_HEADER = ["nu", "q_nu", "S_nu_lo", "S_nu_hi", "G_nu_lo", "G_nu_hi"]
PSI_TRACE_HEADER = ["nu", "t_from", "t_to", "psi_lo", "psi_hi"]


@dataclass(frozen=True)
class PsiValue:
    """psi_alpha(t) = ||q_nu alpha|| on the segment q_nu <= t < q_{nu+1}"""

    nu: int
    value: MeasuredValue


@dataclass(frozen=True)
class IntegralBreakdown:
    """I_alpha(t) = G_N + A_{N+1}(t)"""

    t: Fraction
    N: int
    G_N: MeasuredValue
    A: MeasuredValue
    total: MeasuredValue


def _as_t(t: Rational) -> Fraction:
    t = Fraction(t)
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    return t


class MeasureFunction:
    """The irrationality measure function psi_alpha, its segment sums and its integral"""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings.from_env()

    @property
    def tail_depth(self) -> int:
        return self.settings.tail_depth

    def _depth(self, tail_depth: Optional[int]) -> int:
        return self.tail_depth if tail_depth is None else tail_depth

    # segments and psi

    @staticmethod
    def segment_index(pq: PartialQuotients, t: Rational) -> int:
        """The unique N with q_N <= t < q_{N+1}"""
        t = _as_t(t)
        nu, q_prev, q = 0, 0, 1
        while True:
            if pq.terminates and nu == pq.length:
                return nu
            try:
                a = pq.digit(nu + 1)
            except NeedsMoreDigitsError as e:
                raise NeedsMoreDigitsError(
                    f"t = {t} lies beyond q_{nu} = {q}, the last certified denominator",
                    required=e.required,
                    available=e.available,
                )
            q_next = a * q + q_prev
            if q_next > t:
                return nu
            nu, q_prev, q = nu + 1, q, q_next

    @staticmethod
    def psi_enclosure(pq: PartialQuotients, nu: int, depth: int):
        """Interval enclosure of ||q_nu alpha|| = 1/(q_nu alpha_{nu+1} + q_{nu-1})"""
        if nu < 0:
            raise DomainError(f"Segment index must be >= 0, got {nu}")
        if pq.terminates and nu >= pq.length:
            return iv.mpf(0)
        _, q = convergent_table(pq, nu)
        alpha = tail_enclosure(pq, nu + 1, depth).to_iv()
        return 1 / (iv.mpf(q[nu + 1]) * alpha + iv.mpf(q[nu]))

    def psi_at(self, pq: PartialQuotients, t: Rational, tail_depth: Optional[int] = None) -> PsiValue:
        depth = self._depth(tail_depth)
        nu = self.segment_index(pq, t)
        with interval_precision(self.settings.interval_prec):
            value = MeasuredValue.from_interval(self.psi_enclosure(pq, nu, depth))
        return PsiValue(nu=nu, value=value)

    # segment sums

    @staticmethod
    def summand_enclosures(pq: PartialQuotients, n: int, depth: int) -> List:
        """
        S_1..S_n as intervals, from S_nu = (q_nu - q_{nu-1}) / (q_nu + q_{nu-1}/alpha_{nu+1})
        """
        if n < 0:
            raise DomainError(f"Summand count must be >= 0, got {n}")
        if n == 0:
            return []
        _, q = convergent_table(pq, n)
        terms = []
        for nu in range(1, n + 1):
            q_nu, q_prev = q[nu + 1], q[nu]
            x = reciprocal_tail(pq, nu + 1, depth).to_iv()
            terms.append(iv.mpf(q_nu - q_prev) / (iv.mpf(q_nu) + iv.mpf(q_prev) * x))
        return terms

    def summand_S(self, pq: PartialQuotients, nu: int, tail_depth: Optional[int] = None) -> MeasuredValue:
        if nu < 1:
            raise DomainError(f"Summand index must be >= 1, got {nu}")
        depth = self._depth(tail_depth)
        with interval_precision(self.settings.interval_prec):
            _, q = convergent_table(pq, nu)
            x = reciprocal_tail(pq, nu + 1, depth).to_iv()
            term = iv.mpf(q[nu + 1] - q[nu]) / (iv.mpf(q[nu + 1]) + iv.mpf(q[nu]) * x)
            return MeasuredValue.from_interval(term)

    def running_sums(self, pq: PartialQuotients, n: int, tail_depth: Optional[int] = None) -> List:
        """G_0..G_n as intervals"""
        depth = self._depth(tail_depth)
        with interval_precision(self.settings.interval_prec):
            sums = [iv.mpf(0)]
            for term in self.summand_enclosures(pq, n, depth):
                sums.append(sums[-1] + term)
            return sums

    def partial_sum_G(self, pq: PartialQuotients, n: int, tail_depth: Optional[int] = None) -> MeasuredValue:
        depth = self._depth(tail_depth)
        with interval_precision(self.settings.interval_prec):
            total = iv.mpf(0)
            for term in self.summand_enclosures(pq, n, depth):
                total = total + term
            return MeasuredValue.from_interval(total)

    # integral

    def integral_I(self, pq: PartialQuotients, t: Rational, tail_depth: Optional[int] = None) -> IntegralBreakdown:
        """Certified I_alpha(t) = integral of psi_alpha over [1, t]"""
        t = _as_t(t)
        depth = self._depth(tail_depth)
        N = self.segment_index(pq, t)
        with interval_precision(self.settings.interval_prec):
            G = iv.mpf(0)
            for term in self.summand_enclosures(pq, N, depth):
                G = G + term
            _, q = convergent_table(pq, N)
            offset = t - q[N + 1]
            if offset == 0:
                A = iv.mpf(0)
            else:
                A = iv_from_rational(offset) * self.psi_enclosure(pq, N, depth)
            return IntegralBreakdown(
                t=t,
                N=N,
                G_N=MeasuredValue.from_interval(G),
                A=MeasuredValue.from_interval(A),
                total=MeasuredValue.from_interval(G + A),
            )

    def integral_at_convergent(self, pq: PartialQuotients, n: int, tail_depth: Optional[int] = None) -> IntegralBreakdown:
        """I_alpha(q_n)"""
        _, q = convergent_table(pq, n)
        return self.integral_I(pq, q[n + 1], tail_depth)

    def integral_log_ratio(self, pq: PartialQuotients, n: int, tail_depth: Optional[int] = None) -> MeasuredValue:
        """I_alpha(q_n) / ln q_n"""
        _, q = convergent_table(pq, n)
        if q[n + 1] <= 1:
            raise DomainError("I/ln t needs q_n > 1")
        breakdown = self.integral_at_convergent(pq, n, tail_depth)
        with interval_precision(self.settings.interval_prec):
            return breakdown.total.divided(iv.log(iv.mpf(q[n + 1])))

    @staticmethod
    def brute_force_integral(alpha: Rational, t: Rational) -> Fraction:
        """
        Integral of psi over [1, t] straight from psi(k) = min_{1<=j<=k} ||j alpha||,
        exact for rational alpha
        """
        alpha, t = Fraction(alpha), _as_t(t)
        p, q = alpha.numerator, alpha.denominator
        whole = t.numerator // t.denominator
        total = Fraction(0)
        best = q
        for k in range(1, whole + 1):
            r = (k * p) % q
            best = min(best, r, q - r)
            width = 1 if k < whole else t - whole
            total += width * Fraction(best, q)
        return total

    # traces

    def integral_trace(self, pq: PartialQuotients, n: int, tail_depth: Optional[int] = None) -> List[Dict[str, str]]:
        """Rows nu, q_nu, S_nu_lo, S_nu_hi, G_nu_lo, G_nu_hi for nu = 1..n"""
        depth = self._depth(tail_depth)
        rows = []
        with interval_precision(self.settings.interval_prec):
            _, q = convergent_table(pq, n)
            G = iv.mpf(0)
            for nu, term in enumerate(self.summand_enclosures(pq, n, depth), start=1):
                G = G + term
                rows.append({
                    "nu": str(nu),
                    "q_nu": str(q[nu + 1]),
                    "S_nu_lo": format_lower(term),
                    "S_nu_hi": format_upper(term),
                    "G_nu_lo": format_lower(G),
                    "G_nu_hi": format_upper(G),
                })
        return rows

    def psi_trace(self, pq: PartialQuotients, t_max: Rational, tail_depth: Optional[int] = None) -> List[Dict[str, str]]:
        """One row per step of psi on [1, t_max]"""
        t_max = _as_t(t_max)
        depth = self._depth(tail_depth)
        last = self.segment_index(pq, t_max)
        rows = []
        with interval_precision(self.settings.interval_prec):
            _, q = convergent_table(pq, last)
            for nu in range(0, last + 1):
                start = max(Fraction(1), Fraction(q[nu + 1]))
                if nu < last:
                    end = Fraction(q[nu + 2])
                else:
                    end = t_max
                if end <= start:
                    continue
                psi = self.psi_enclosure(pq, nu, depth)
                rows.append({
                    "nu": str(nu),
                    "t_from": str(start),
                    "t_to": str(end),
                    "psi_lo": format_lower(psi),
                    "psi_hi": format_upper(psi),
                })
        return rows

    # inequalities

    def check_basic_bounds(
        self,
        pq: PartialQuotients,
        n: int,
        t_values: Iterable[Rational] = (),
        tail_depth: Optional[int] = None,
        gaps: Iterable[int] = (1, 2, 3, 5, 8, 13, 21, 34, 55, 89),
    ) -> List[BoundCheck]:
        """
        Summand, partial-sum and integral inequalities for one number:
        0 <= S_nu < 1, G_n < n, the ratio-drift bound for G_n/n, and at each t
        the sandwich G_N <= I < G_{N+1}, 0 <= A < S_{N+1}, I - G_N < 1,
        t psi(t) < 1 and I < ln t
        """
        depth = self._depth(tail_depth)
        checks: List[BoundCheck] = []
        with interval_precision(self.settings.interval_prec):
            terms = self.summand_enclosures(pq, n, depth)
            if terms:
                worst = max(terms, key=iv_hi)
                checks.append(below("S_nu < 1", MeasuredValue.from_interval(worst), 1, n=n))
                lowest = max((-term for term in terms), key=iv_hi)
                checks.append(at_most("-S_nu <= 0", MeasuredValue.from_interval(lowest), 0, n=n))
            sums = [iv.mpf(0)]
            for term in terms:
                sums.append(sums[-1] + term)
            if n >= 1:
                excess = max((sums[m] - m for m in range(1, n + 1)), key=iv_hi)
                checks.append(below("G_n - n < 0", MeasuredValue.from_interval(excess), 0, n=n))
            drift = None
            for m in range(1, n + 1):
                for k in gaps:
                    if m + k > n:
                        break
                    gap = abs(sums[m + k] / (m + k) - sums[m] / m) - iv_from_rational(Fraction(k, m + k))
                    if drift is None or iv_hi(gap) > iv_hi(drift):
                        drift = gap
            if drift is not None:
                checks.append(below("|G_(n+k)/(n+k) - G_n/n| - k/(n+k) < 0", MeasuredValue.from_interval(drift), 0, n=n))

            for t in t_values:
                checks.extend(self._integral_checks(pq, _as_t(t), depth))
        return checks

    def _integral_checks(self, pq: PartialQuotients, t: Fraction, depth: int) -> List[BoundCheck]:
        N = self.segment_index(pq, t)
        breakdown = self.integral_I(pq, t, depth)
        psi = self.psi_enclosure(pq, N, depth)
        _, q = convergent_table(pq, N)
        label = str(t)
        checks = [
            at_most("G_N - I <= 0", MeasuredValue.from_interval(-breakdown.A.to_iv()), 0, t=label),
            below("I - G_N < 1", breakdown.A, 1, t=label),
            below("t psi(t) < 1", MeasuredValue.from_interval(iv_from_rational(t) * psi), 1, t=label),
        ]
        if not (pq.terminates and N >= pq.length):
            # A - S_{N+1} = (t - q_{N+1}) psi_N
            _, q_next = convergent_table(pq, N + 1)
            slack = iv_from_rational(t - q_next[N + 2]) * psi
            checks.append(below("I - G_(N+1) < 0", MeasuredValue.from_interval(slack), 0, t=label))
        if t > 1:
            gap = breakdown.total.to_iv() - iv.log(iv_from_rational(t))
            checks.append(below("I - ln t < 0", MeasuredValue.from_interval(gap), 0, t=label))
        return checks

    def render_interface(self):
        """Render the Streamlit page for psi, G_n and I"""
        st.header("📈 Irrationality Measure Function")
        st.markdown("Evaluate ψ_α(t), the segment sums G_n and the integral I_α(t) with certified error bounds.")

        col1, col2 = st.columns(2)
        with col1:
            expression = st.text_input(
                "α expression",
                value="golden",
                help="golden, silver, [0;1,2,3], periodic:1|2, rule:euler, random:42 or p/q",
            )
            t_text = st.text_input("t (rational)", value="25/2")
        with col2:
            n = st.number_input("n for G_n", min_value=0, max_value=5000, value=40)
            depth = st.slider("Tail depth", min_value=0, max_value=200, value=self.tail_depth)

        if st.button("🔢 Evaluate"):
            try:
                pq = PartialQuotients.parse(expression)
                t = Fraction(t_text)
                psi = self.psi_at(pq, t, depth)
                breakdown = self.integral_I(pq, t, depth)
                G = self.partial_sum_G(pq, int(n), depth)

                st.success(f"ψ_α({t}) = {psi.value}  (segment N = {psi.nu})")
                if pq.source == "periodic":
                    st.write(f"**α** = {pq.value()}, **α_{psi.nu + 1}** = {exact_tail(pq, psi.nu + 1)}")
                st.write(f"**G_{int(n)}** = {G}")
                st.write(f"**I_α({t})** = {breakdown.total} = G_{breakdown.N} + A with A = {breakdown.A}")

                rows = self.psi_trace(pq, t, depth)
                plot = StepPlot(title=f"ψ_α(t) for α = {expression}", x_label="t", y_label="ψ")
                for row in rows:
                    plot.add_step(Fraction(row["t_from"]), Fraction(row["t_to"]), float(row["psi_hi"]))
                st.pyplot(plot.figure())

                with st.expander("📋 Segment table"):
                    st.dataframe(self.integral_trace(pq, int(n), depth))
            except (ContinuedFractionError, ValueError, ZeroDivisionError) as e:
                st.error(f"Evaluation failed: {e}")
                logger.error("measure function page: %s", e)


def main():
    """Main function for the measure function page"""
    st.set_page_config(page_title="Irrationality Measure Function", page_icon="📈", layout="wide")
    MeasureFunction().render_interface()


if __name__ == "__main__":
    main()
