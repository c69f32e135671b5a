#!/usr/bin/env python3
"""
Test suite for the Irrationality Measure Explorer
"""

import unittest
import tempfile
import os
import json
import math
from fractions import Fraction
from pathlib import Path
from unittest import mock

import numpy as np

# Import our modules
from utils.config import ExperimentConfig, Settings
from utils.continued_fractions import (
    PartialQuotients,
    certified_prefix,
    convergents,
    denominators,
    determinant,
    dyadic_sample,
    exact_tail,
    extract_digits,
    load_presets,
    rational_digits,
    reciprocal_tail,
    reversed_tail,
    tail_enclosure,
)
from utils.errors import (
    DomainError,
    InsufficientPrecisionError,
    InvalidDigitError,
    NeedsMoreDigitsError,
    PatternError,
)
from utils.interval_utils import RationalInterval
from utils.surd_utils import QuadraticSurd
from measure_function import MeasureFunction
from extremal_sums import BlockSpec, ExtremalSums
from gauss_dynamics import GaussDynamics, gauss_step
from experiments import (
    HEADERS,
    default_grid,
    derive_trial_seed,
    resolve_alpha,
    run_bound_sweep,
    run_experiment,
)

FULL_ACCEPTANCE = os.environ.get("DAL_FULL_ACCEPTANCE") == "1"

S1 = (5 - math.sqrt(5)) / 10


def make_settings() -> Settings:
    return Settings(tail_depth=40, interval_prec=128)


def assert_orbits_agree(case: unittest.TestCase, dynamics: GaussDynamics, pq: PartialQuotients, y0: Fraction, n: int):
    closed = dynamics.orbit_via_convergents(pq, y0, n)
    stepped = dynamics.orbit_by_steps(pq, y0, n)
    case.assertEqual(len(closed), n + 1)
    for a, b in zip(closed, stepped):
        case.assertEqual(a.y, b.y, f"nu={a.nu}")
        case.assertLessEqual(max(a.x.lo, b.x.lo), min(a.x.hi, b.x.hi), f"nu={a.nu}")


class TestContinuedFractions(unittest.TestCase):
    """Test digit streams, continuants and tails"""

    def setUp(self):
        self.golden = PartialQuotients.golden()
        self.euler = PartialQuotients.from_rule("euler")
        self.seven_tenths = PartialQuotients.from_rational("7/10")

    def test_golden_denominators(self):
        """Denominators of the golden ratio are Fibonacci numbers"""
        self.assertEqual(denominators(self.golden, 6), (0, 1, 1, 2, 3, 5, 8, 13))

    def test_determinant_alternates(self):
        """p_{nu-1} q_nu - p_nu q_{nu-1} = (-1)^nu"""
        pairs = convergents(self.euler, 12)
        for previous, current in zip(pairs, pairs[1:]):
            self.assertEqual(determinant(previous, current), (-1) ** current.nu)

    def test_rational_expansion(self):
        """Euclid gives the terminating expansion and its value"""
        self.assertEqual(rational_digits(Fraction(7, 10)), [1, 2, 3])
        self.assertEqual(self.seven_tenths.digits(3), (1, 2, 3))
        self.assertEqual(self.seven_tenths.value(), Fraction(7, 10))
        with self.assertRaises(DomainError):
            rational_digits(Fraction(3, 2))

    def test_euler_rule(self):
        """e - 2 has digits 1, 2, 1, 1, 4, 1, 1, 6"""
        self.assertEqual(self.euler.digits(8), (1, 2, 1, 1, 4, 1, 1, 6))

    def test_parse_forms(self):
        """Every alpha form parses to the expected digits"""
        self.assertEqual(PartialQuotients.parse("[0;1,2,3]").digits(3), (1, 2, 3))
        self.assertTrue(PartialQuotients.parse("[0;1,2,3]").terminates)
        self.assertEqual(PartialQuotients.parse("periodic:3|1,2").digits(5), (3, 1, 2, 1, 2))
        self.assertEqual(PartialQuotients.parse("rule:increasing").digits(4), (1, 2, 3, 4))
        self.assertEqual(PartialQuotients.parse("sqrt3").digits(4), (1, 2, 1, 2))
        self.assertEqual(PartialQuotients.parse("5/13").digits(4), (2, 1, 1, 2))
        self.assertEqual(PartialQuotients.parse("random:7", bits=256), extract_digits(256, 7))

    def test_parse_errors(self):
        """Malformed expressions raise domain or digit errors"""
        with self.assertRaises(DomainError):
            PartialQuotients.parse("bogus")
        with self.assertRaises(DomainError):
            PartialQuotients.parse("[1;2]")
        with self.assertRaises(InvalidDigitError):
            PartialQuotients.parse("[0;1,0,2]")

    def test_prefix_marker(self):
        """A trailing ... marks a prefix whose tail is unknown"""
        prefix = PartialQuotients.parse("[0;1,2,3...]")
        self.assertFalse(prefix.terminates)
        with self.assertRaises(NeedsMoreDigitsError):
            prefix.digit(4)
        self.assertEqual(prefix.serialize(), "1,2,3…")
        self.assertEqual(PartialQuotients.parse_digit_field("1,2,3…"), ((1, 2, 3), True))
        self.assertEqual(self.seven_tenths.serialize(), "1,2,3")

    def test_tail_enclosure_brackets_phi(self):
        """alpha_1 of the golden ratio is phi"""
        enclosure = tail_enclosure(self.golden, 1, 30)
        self.assertLess(enclosure.lo, enclosure.hi)
        self.assertTrue(enclosure.contains(Fraction(1618033988749895, 10**15)))

    def test_denominators_grow_geometrically(self):
        """q_nu >= 2^((nu - 1)/2)"""
        streams = (self.golden, self.euler, PartialQuotients.parse("sqrt7"), PartialQuotients.parse("silver"))
        for pq in streams:
            q = denominators(pq, 80)
            for nu in range(1, 81):
                self.assertGreaterEqual(q[nu + 1] ** 2, 2 ** (nu - 1), f"{pq.label} nu={nu}")

    def test_reversed_tail(self):
        """alpha*_nu = q_{nu-1}/q_nu = 1/(a_nu + alpha*_{nu-1}) with alpha*_0 = 0"""
        self.assertEqual(reversed_tail(self.golden, 0).value, 0)
        self.assertEqual(reversed_tail(self.golden, 2).value, Fraction(1, 2))
        self.assertEqual(reversed_tail(PartialQuotients.parse("[0;1,2,3]"), 3).value, Fraction(3, 10))
        for pq in (self.golden, self.euler, self.seven_tenths):
            top = pq.available(20)
            for nu in range(1, top + 1):
                previous = reversed_tail(pq, nu - 1).value
                self.assertEqual(reversed_tail(pq, nu).value, 1 / (pq.digit(nu) + previous))
        with self.assertRaises(DomainError):
            reversed_tail(self.golden, -1)

    def test_periodic_values_are_exact(self):
        """A periodic stream knows its value and its tails as quadratic surds"""
        self.assertEqual(self.golden.value(), (QuadraticSurd.sqrt(5) - 1) / 2)
        self.assertEqual(exact_tail(self.golden, 7), (QuadraticSurd.sqrt(5) + 1) / 2)
        self.assertEqual(PartialQuotients.parse("silver").value(), QuadraticSurd.sqrt(2) - 1)
        sqrt3 = PartialQuotients.parse("sqrt3")
        self.assertEqual(sqrt3.value(), QuadraticSurd.sqrt(3) - 1)
        self.assertEqual(exact_tail(sqrt3, 1), (QuadraticSurd.sqrt(3) + 1) / 2)
        self.assertEqual(exact_tail(sqrt3, 2), QuadraticSurd.sqrt(3) + 1)
        with self.assertRaises(DomainError):
            exact_tail(self.euler, 1)
        with self.assertRaises(DomainError):
            self.euler.value()

    def test_tail_enclosures_nest(self):
        """Deeper brackets sit inside shallower ones and always hold the exact tail"""
        for pq in (self.golden, PartialQuotients.parse("periodic:3,1|1,4,2"), PartialQuotients.parse("sqrt7")):
            for nu in range(1, 7):
                exact = exact_tail(pq, nu)
                previous = None
                for depth in range(0, 15):
                    enclosure = tail_enclosure(pq, nu, depth)
                    self.assertGreaterEqual(exact.compare(enclosure.lo), 0)
                    self.assertLessEqual(exact.compare(enclosure.hi), 0)
                    if previous is not None:
                        self.assertGreaterEqual(enclosure.lo, previous.lo)
                        self.assertLessEqual(enclosure.hi, previous.hi)
                        self.assertLess(enclosure.width, previous.width)
                    previous = enclosure

    def test_random_stream_identities(self):
        """Determinant, growth and reversed-tail identities on a thousand random streams"""
        rng = np.random.default_rng(2024)
        for index in range(1000):
            length = int(rng.integers(1, 31))
            digits = [int(a) for a in rng.integers(1, 51, size=length)]
            pq = PartialQuotients.explicit(digits, label=f"stream {index}")
            pairs = convergents(pq, length)
            for previous, current in zip(pairs, pairs[1:]):
                self.assertEqual(determinant(previous, current), (-1) ** current.nu, digits)
            star = Fraction(0)
            for nu in range(1, length + 1):
                star = 1 / (digits[nu - 1] + star)
                self.assertEqual(reversed_tail(pq, nu).value, star, digits)
                self.assertGreaterEqual(pairs[nu + 1].q ** 2, 2 ** (nu - 1), digits)
            self.assertEqual(pq.value(), Fraction(pairs[-1].p, pairs[-1].q))

    def test_terminating_tail_is_exact(self):
        """Tails of a rational are exact, and infinite past the end"""
        enclosure = tail_enclosure(self.seven_tenths, 2, 40)
        self.assertTrue(enclosure.is_exact)
        self.assertEqual(enclosure.lo, Fraction(7, 3))
        self.assertEqual(reciprocal_tail(self.seven_tenths, 4, 40), RationalInterval.point(0))

    def test_certified_prefix_drops_ambiguous_digit(self):
        """The last digit of a rational could also be written as (a - 1, 1)"""
        self.assertEqual(certified_prefix(Fraction(7, 10), Fraction(7, 10)), [1, 2])

    def test_extract_digits_are_certified(self):
        """Every extracted digit is shared by both ends of the sampled dyadic interval"""
        pq = extract_digits(4096, 1)
        lo = dyadic_sample(4096, 1)
        hi = lo + Fraction(1, 1 << 4096)
        n = len(pq.preamble)
        self.assertGreater(n, 300)
        self.assertEqual(rational_digits(lo)[:n], list(pq.preamble))
        self.assertEqual(rational_digits(hi)[:n], list(pq.preamble))
        self.assertEqual(extract_digits(4096, 1), pq)

    def test_extract_digits_needs_bits(self):
        """Fewer than 64 bits is refused"""
        with self.assertRaises(DomainError):
            extract_digits(32, 1)

    def test_presets(self):
        """The shipped presets load"""
        presets = load_presets()
        for name in ("golden", "silver", "sqrt3", "sqrt7", "euler", "increasing"):
            self.assertIn(name, presets)
        self.assertEqual(presets["sqrt7"].digits(8), (1, 1, 1, 4, 1, 1, 1, 4))


class TestMeasureFunction(unittest.TestCase):
    """Test psi, the segment sums and the integral"""

    def setUp(self):
        self.measure = MeasureFunction(make_settings())
        self.golden = PartialQuotients.golden()
        self.euler = PartialQuotients.from_rule("euler")

    def test_segment_index(self):
        """q_N <= t < q_{N+1}"""
        self.assertEqual(self.measure.segment_index(self.golden, 1), 1)
        self.assertEqual(self.measure.segment_index(self.golden, Fraction(25, 2)), 5)
        self.assertEqual(self.measure.segment_index(self.golden, 13), 6)
        with self.assertRaises(DomainError):
            self.measure.segment_index(self.golden, Fraction(1, 2))

    def test_psi_of_rational(self):
        """psi(t) for 7/10 is exactly ||q alpha||"""
        pq = PartialQuotients.from_rational("7/10")
        psi = self.measure.psi_at(pq, 2)
        self.assertEqual(psi.nu, 1)
        self.assertTrue(psi.value.contains(Fraction(3, 10)))
        self.assertTrue(self.measure.psi_at(pq, 10).value.contains(0))

    def test_integral_matches_brute_force(self):
        """I(t) agrees with the direct integral of min ||j alpha|| for rational alpha"""
        for text in ("7/10", "5/13", "21/34"):
            pq = PartialQuotients.from_rational(text)
            for t in ("1", "5/2", "9", "10", "23/2", "40"):
                expected = MeasureFunction.brute_force_integral(Fraction(text), Fraction(t))
                breakdown = self.measure.integral_I(pq, Fraction(t))
                self.assertTrue(breakdown.total.contains(expected), f"alpha={text} t={t}")

    def test_integral_matches_brute_force_on_random_rationals(self):
        """A hundred random p/q with q <= 200, each at t before, at and past q"""
        rng = np.random.default_rng(99)
        for _ in range(100):
            q = int(rng.integers(2, 201))
            p = int(rng.integers(1, q))
            alpha = Fraction(p, q)
            pq = PartialQuotients.from_rational(alpha)
            for t in (Fraction(1), Fraction(7, 2), Fraction(alpha.denominator), Fraction(2 * q + 1, 2)):
                expected = MeasureFunction.brute_force_integral(alpha, t)
                breakdown = self.measure.integral_I(pq, t)
                self.assertTrue(breakdown.total.contains(expected), f"alpha={alpha} t={t}")

    def test_partial_sum_of_rational(self):
        """G_3 for 7/10 is 0 + 3/5 + 7/10"""
        pq = PartialQuotients.from_rational("7/10")
        self.assertTrue(self.measure.partial_sum_G(pq, 3).contains(Fraction(13, 10)))

    def test_golden_average(self):
        """G_n/n for the golden ratio stays within 4/n of S(1)"""
        n = 200
        G = self.measure.partial_sum_G(self.golden, n)
        self.assertLess(abs(float(G) / n - S1), 4 / n)

    def test_golden_log_ratio(self):
        """I(q_n)/ln q_n approaches S(1)/ln phi for the golden ratio"""
        ratio = self.measure.integral_log_ratio(self.golden, 1000)
        limit = float(ExtremalSums(make_settings()).golden_integral_ratio())
        self.assertAlmostEqual(float(ratio), limit, delta=0.02)

    def test_golden_log_ratio_at_q40(self):
        """I(q_40)/ln q_40 for the golden ratio is 0.574371 within 0.005"""
        ratio = self.measure.integral_log_ratio(self.golden, 40)
        limit = ExtremalSums(make_settings()).golden_integral_ratio()
        self.assertAlmostEqual(float(limit), 0.574371, delta=1e-5)
        self.assertAlmostEqual(float(ratio), 0.574371, delta=0.005)
        self.assertLess(float(ratio.width), 1e-12)

    def test_basic_bounds_hold(self):
        """Summand, partial-sum and integral inequalities for several numbers"""
        t_values = [Fraction(1), Fraction(5, 2), Fraction(100), Fraction(12345, 7)]
        for pq in (self.golden, self.euler, PartialQuotients.parse("silver")):
            checks = self.measure.check_basic_bounds(pq, 60, t_values)
            self.assertGreater(len(checks), 10)
            for check in checks:
                self.assertTrue(check.holds, check.to_row())

    def test_integral_sandwich(self):
        """G_N <= I(t) < G_{N+1}"""
        breakdown = self.measure.integral_I(self.euler, 100)
        upper = self.measure.partial_sum_G(self.euler, breakdown.N + 1)
        self.assertLessEqual(breakdown.G_N.lo, breakdown.total.hi)
        self.assertLess(breakdown.total.lo, upper.hi)

    def test_psi_trace(self):
        """The golden ratio has steps at 1, 2, 3, 5 and 8 below 13"""
        rows = self.measure.psi_trace(self.golden, 13)
        self.assertEqual([row["t_from"] for row in rows], ["1", "2", "3", "5", "8"])
        self.assertEqual(rows[-1]["t_to"], "13")

    def test_integral_trace(self):
        """The G_nu column never decreases"""
        rows = self.measure.integral_trace(self.euler, 30)
        self.assertEqual(len(rows), 30)
        values = [Fraction(row["G_nu_hi"]) for row in rows]
        self.assertEqual(values, sorted(values))


class TestExtremalSums(unittest.TestCase):
    """Test S(z), the inequalities for G_n and the constructor"""

    def setUp(self):
        self.extremal = ExtremalSums(make_settings())
        self.golden = PartialQuotients.golden()
        self.euler = PartialQuotients.from_rule("euler")

    def test_S_closed_values(self):
        """S(1) = (5 - sqrt 5)/10, S(2) = 1/2, S(inf) = 1"""
        self.assertAlmostEqual(float(self.extremal.S_closed(1)), S1, places=12)
        self.assertEqual(self.extremal.S_closed(2), Fraction(1, 2))
        self.assertEqual(str(self.extremal.S_closed(2)), "1/2")
        self.assertEqual(float(self.extremal.S_closed("inf")), 1.0)
        with self.assertRaises(DomainError):
            self.extremal.S_closed(Fraction(1, 2))

    def test_S_increasing(self):
        """S grows with z and stays below 1"""
        values = [self.extremal.S_closed(z) for z in range(1, 12)]
        for lower, upper in zip(values, values[1:]):
            self.assertLess(lower, upper)
        self.assertLess(values[-1], 1)

    def test_constant_stream_deviation(self):
        """|G_n(z, z, ...) - S(z) n| <= 4"""
        for z in (1, 2, 3, 7, Fraction(5, 2)):
            self.assertTrue(self.extremal.check_constant_stream(z, 300).holds)

    def test_generalized_sum_of_rational(self):
        """G_3 of (1, 2, 3) with an infinite tail is 13/10"""
        self.assertTrue(self.extremal.sum_with_tail(PartialQuotients.from_rational("7/10"), 3, "inf").contains(
            Fraction(13, 10)))

    def test_band_contains_true_sum(self):
        """G_n(alpha) lies between G_n(alpha, 1) and G_n(alpha, inf)"""
        G = MeasureFunction(make_settings()).partial_sum_G(self.euler, 30)
        low, high = self.extremal.sum_band(self.euler, 30)
        self.assertLessEqual(low.lo, G.hi)
        self.assertLessEqual(G.lo, high.hi)

    def test_prefix_checks(self):
        """Shared prefixes differ by less than 1, a different first digit by less than 8"""
        shared = self.extremal.check_prefix_insensitivity(
            self.golden, PartialQuotients.parse("periodic:1,1,1,1,1,1|2"), 5)
        self.assertEqual(shared.name, "shared-prefix deviation")
        self.assertTrue(shared.holds)
        first = self.extremal.check_prefix_insensitivity(
            PartialQuotients.parse("periodic:3|1,2"), PartialQuotients.parse("periodic:9|1,2"), 10)
        self.assertEqual(first.name, "first-digit deviation")
        self.assertTrue(first.holds)
        with self.assertRaises(PatternError):
            self.extremal.check_prefix_insensitivity(self.golden, PartialQuotients.parse("silver"), 3)

    def test_prefix_check_encloses_later_digits(self):
        """Streams equal over the whole span still get an enclosure, not an exact zero"""
        span = 3 + 1 + make_settings().tail_depth
        twin = PartialQuotients.explicit(self.golden.digits(span) + (7,) * 5, terminates=False)
        check = self.extremal.check_prefix_insensitivity(self.golden, twin, 3)
        self.assertEqual(check.name, "shared-prefix deviation")
        self.assertTrue(check.holds)
        self.assertTrue(check.observed.contains(0))
        self.assertGreater(check.observed.hi, 0)

    def test_exact_target_gives_constant_stream(self):
        """d = S(2) = 1/2 is met by the constant stream 2, 2, ... with no blocks"""
        construction = self.extremal.construct_alpha(Fraction(1, 2), n_digits=500)
        self.assertEqual(construction.digits.digits(5), (2, 2, 2, 2, 2))
        self.assertTrue(construction.spec.constant)
        self.assertEqual(construction.spec.block_lengths, ())
        for check in self.extremal.check_construction(construction, [100, 500]):
            self.assertTrue(check.holds, check.to_row())

    def test_append_and_substitution(self):
        """Appending a digit moves G by less than 3; one odd digit keeps G within 13 of S(z) n"""
        self.assertTrue(self.extremal.check_append(self.golden, "3/2", "inf", 10).holds)
        self.assertTrue(self.extremal.check_append(self.euler, "inf", 1, 25).holds)
        self.assertTrue(self.extremal.check_single_substitution(9, 2, 100).holds)
        self.assertTrue(self.extremal.check_single_substitution(1, 3, 50).holds)

    def test_all_ones_minimality(self):
        """Replacing the first digits by ones never increases G_n"""
        self.assertTrue(self.extremal.check_all_ones_minimality(self.euler, 20).holds)
        self.assertTrue(self.extremal.check_all_ones_minimality(self.golden, 20).holds)

    def test_ratio_bounds(self):
        """S(1) - 5/n0 <= G_n/n < 1"""
        checks = self.extremal.check_ratio_bounds(self.euler, 10, 300)
        self.assertEqual(len(checks), 2)
        self.assertTrue(all(check.holds for check in checks))

    def test_infinite_tail_identity(self):
        """G_n(alpha, inf) = G_{n-1}(alpha, a_n) + 1 - alpha*_n"""
        self.assertTrue(self.extremal.check_infinite_tail_identity(self.euler, 50).holds)

    def test_monotonicity(self):
        """G_n grows in each of its first n + 1 coordinates"""
        for k in (1, 5, 12, 13):
            self.assertEqual(self.extremal.check_monotonicity(self.euler, k, 12), 1)
        with self.assertRaises(DomainError):
            self.extremal.check_monotonicity(self.euler, 14, 12)

    def test_choose_digits(self):
        """a = max{z : S(z) <= d}"""
        self.assertEqual(self.extremal.choose_digits(Fraction(3, 10)), (1, False))
        self.assertEqual(self.extremal.choose_digits(Fraction(1, 2)), (2, True))
        self.assertEqual(self.extremal.choose_digits(Fraction(3, 4)), (4, False))
        self.assertEqual(self.extremal.choose_digits(Fraction(9, 10)), (10, False))

    def test_block_spec(self):
        """Block layout bookkeeping"""
        spec = BlockSpec(a=1, b=2, block_lengths=(3, 2, 4))
        self.assertEqual(spec.W, (3, 5, 9))
        self.assertEqual(spec.M, 4)
        self.assertEqual(spec.digits(), [1, 1, 1, 2, 2, 1, 1, 1, 1])
        with self.assertRaises(DomainError):
            BlockSpec(a=1, b=2, block_lengths=(0,))

    def test_construct_two_fifths(self):
        """Alternating runs of 1 and 2 hold the average at 2/5"""
        construction = self.extremal.construct_alpha(Fraction(2, 5), n_digits=3000)
        spec = construction.spec
        self.assertEqual((spec.a, spec.b), (1, 2))
        self.assertGreater(len(spec.block_lengths), 2)
        self.assertEqual(list(construction.digits.preamble), spec.digits())
        for check in self.extremal.check_construction(construction, [1000, 2000, 3000]):
            self.assertTrue(check.holds, check.to_row())
        ratio = self.extremal.construction_ratio(construction, 3000)
        self.assertAlmostEqual(float(ratio), 0.4, delta=0.01)

    def test_construct_exact_and_limit_cases(self):
        """d = S(2) gives the constant stream 2, d = 1 the increasing digits"""
        constant = self.extremal.construct_alpha(Fraction(1, 2))
        self.assertTrue(constant.spec.constant)
        self.assertEqual(constant.digits.digits(5), (2, 2, 2, 2, 2))
        self.assertTrue(all(c.holds for c in self.extremal.check_construction(constant, [10, 100])))
        increasing = self.extremal.construct_alpha(1)
        self.assertIsNone(increasing.spec)
        self.assertTrue(all(c.holds for c in self.extremal.check_construction(increasing, [10, 50])))
        with self.assertRaises(DomainError):
            self.extremal.construct_alpha("0.2")
        with self.assertRaises(DomainError):
            self.extremal.construct_alpha("3/2")


class TestGaussDynamics(unittest.TestCase):
    """Test the Gauss map, its natural extension and the invariant measures"""

    def setUp(self):
        self.dynamics = GaussDynamics(make_settings())
        self.euler = PartialQuotients.from_rule("euler")

    def test_gauss_step(self):
        """T(7/10) = 3/7 and T(0) = 0"""
        self.assertEqual(gauss_step(Fraction(7, 10)), RationalInterval.point(Fraction(3, 7)))
        self.assertEqual(gauss_step(0), RationalInterval.point(0))
        with self.assertRaises(DomainError):
            gauss_step(1)
        with self.assertRaises(InsufficientPrecisionError):
            gauss_step(RationalInterval(Fraction(1, 3) - Fraction(1, 100), Fraction(1, 3) + Fraction(1, 100)))

    def test_orbits_agree(self):
        """Closed-form and stepped orbits give the same y and overlapping x"""
        closed = self.dynamics.orbit_via_convergents(self.euler, Fraction(1, 3), 15)
        stepped = self.dynamics.orbit_by_steps(self.euler, Fraction(1, 3), 15)
        self.assertEqual(len(closed), 16)
        for a, b in zip(closed, stepped):
            self.assertEqual(a.y, b.y)
            self.assertLessEqual(max(a.x.lo, b.x.lo), min(a.x.hi, b.x.hi))

    def test_orbits_agree_on_random_numbers(self):
        """Both orbit constructions agree along a hundred steps of random alpha"""
        for seed in range(1, 6):
            assert_orbits_agree(self, self.dynamics, extract_digits(2048, seed), Fraction(seed, 7), 100)

    def test_birkhoff_sum_is_G(self):
        """From y0 = 0 the Birkhoff sum of f is G_n"""
        accumulator = self.dynamics.birkhoff_mean_f(self.euler, 0, 40)
        G = MeasureFunction(make_settings()).partial_sum_G(self.euler, 40)
        self.assertEqual(accumulator.n, 40)
        self.assertLessEqual(max(accumulator.sum.lo, G.lo), min(accumulator.sum.hi, G.hi))

    def test_initial_y_insensitivity(self):
        """Changing y0 moves the Birkhoff sum by less than 4"""
        for y0 in (Fraction(1, 3), Fraction(1), Fraction(9, 10)):
            self.assertTrue(self.dynamics.check_initial_y_insensitivity(self.euler, y0, 200).holds)

    def test_gauss_measure(self):
        """mu is a probability measure and T-invariant"""
        self.assertIn(1, GaussDynamics.gauss_measure(0, 1))
        self.assertTrue(self.dynamics.check_gauss_invariance(Fraction(1, 5), Fraction(1, 2)).contains(0))

    def test_levy_golden(self):
        """(ln q_n)/n tends to ln phi for the golden ratio"""
        ratio = GaussDynamics.levy_ratio(PartialQuotients.golden(), 1000)
        self.assertAlmostEqual(float(ratio), math.log((1 + math.sqrt(5)) / 2), delta=0.002)

    def test_density_integrals(self):
        """The quadrature encloses ln2/2 and 1"""
        first, second = GaussDynamics.gauss_density_integrals(2 ** 9)
        self.assertTrue(first.contains(math.log(2) / 2))
        self.assertTrue(second.contains(1))
        self.assertLess(float(first.width), 1e-4)

    def test_density_integrals_coarse_grids_still_enclose(self):
        """Coarse grids give wide but valid enclosures that shrink as the grid refines"""
        previous = None
        for resolution in (2, 3, 8, 64):
            first, second = GaussDynamics.gauss_density_integrals(resolution, prec=96)
            self.assertTrue(first.contains(math.log(2) / 2), resolution)
            self.assertTrue(second.contains(1), resolution)
            if previous is not None:
                self.assertLess(float(first.width), previous)
            previous = float(first.width)
        with self.assertRaises(DomainError):
            GaussDynamics.gauss_density_integrals(1)

    def test_orbit_rows(self):
        """Rows follow the orbit header"""
        rows = self.dynamics.orbit_rows(self.euler, 0, 5)
        self.assertEqual(len(rows), 6)
        self.assertEqual(rows[2]["y_num"] + "/" + rows[2]["y_den"], "1/3")


class TestExperiments(unittest.TestCase):
    """Test seeding, trials and sweeps"""

    def setUp(self):
        self.cfg = ExperimentConfig(trials=4, digits_n=200, bits_B=4096, master_seed=7)

    def test_seed_derivation(self):
        """Seeds depend only on (master, index, stream)"""
        self.assertEqual(derive_trial_seed(7, 3), derive_trial_seed(7, 3))
        seeds = {derive_trial_seed(7, i, s) for i in range(20) for s in (0, 1)}
        self.assertEqual(len(seeds), 40)

    def test_average_is_reproducible(self):
        """The same config gives the same trial CSV"""
        first = run_experiment("average", self.cfg)
        second = run_experiment("average", self.cfg)
        self.assertEqual(first.records_csv(), second.records_csv())
        self.assertEqual(first.records_csv().splitlines()[0], ",".join(HEADERS["average"]))
        self.assertEqual(len(first.records), 4)

    def test_workers_do_not_change_results(self):
        """Trials are folded in index order whatever the worker count"""
        cfg = self.cfg.model_copy(update={"trials": 3})
        serial = run_experiment("levy", cfg)
        parallel = run_experiment("levy", cfg.model_copy(update={"workers": 2}))
        self.assertEqual(serial.records_csv(), parallel.records_csv())

    def test_levy_near_constant(self):
        """(ln q_n)/n of random numbers clusters around pi^2/(12 ln 2)"""
        summary = run_experiment("levy", self.cfg.model_copy(update={"trials": 5, "digits_n": 300}))
        self.assertAlmostEqual(summary.mean["levy"], math.pi ** 2 / (12 * math.log(2)), delta=0.15)

    def test_pair_control(self):
        """Golden against silver drifts with slope S(1) - S(2)"""
        cfg = self.cfg.model_copy(update={"trials": 1, "alpha_override": "golden", "beta_override": "silver"})
        summary = run_experiment("pair", cfg)
        record = summary.records[0]
        self.assertEqual(record.extras["sign_changes"], 0)
        self.assertAlmostEqual(float(record.extras["slope"]), S1 - 0.5, delta=0.001)
        self.assertEqual(record.extras["adjacent_abs_d_hi"], "")
        self.assertFalse(record.passed)
        self.assertEqual(summary.pass_fraction, 0)
        self.assertFalse(summary.passed)

    def test_random_pairs_cross(self):
        """A random pair passes exactly when D_n changes sign, and |D| is small at the crossing"""
        summary = run_experiment("pair", self.cfg.model_copy(update={"trials": 6, "digits_n": 400}))
        crossed = 0
        for record in summary.records:
            self.assertEqual(record.status, "ok")
            changes = record.extras["sign_changes"]
            self.assertEqual(record.passed, changes > 0)
            if changes:
                crossed += 1
                self.assertLessEqual(float(record.extras["adjacent_abs_d_hi"]), self.cfg.pair_gap_bound)
                self.assertLessEqual(float(record.extras["min_abs_d_hi"]), float(record.extras["adjacent_abs_d_hi"]))
        self.assertGreater(crossed, 0)
        header = summary.records_csv().splitlines()[0].split(",")
        self.assertIn("adjacent_abs_d_hi", header)

    def test_outputs_written(self):
        """CSV and JSON land next to each other"""
        with tempfile.TemporaryDirectory() as temp_dir:
            target = Path(temp_dir) / "levy.csv"
            run_experiment("levy", self.cfg.model_copy(update={"trials": 2, "output": str(target)}))
            self.assertTrue(target.exists())
            payload = json.loads(target.with_suffix(".json").read_text())
            self.assertEqual(payload["experiment"], "levy")
            self.assertEqual(payload["n_trials"], 2)

    def test_unknown_experiment(self):
        with self.assertRaises(DomainError):
            run_experiment("nonexistent", self.cfg)

    def test_resolve_construct(self):
        """construct:d resolves through the constructor"""
        pq = resolve_alpha("construct:1/2", make_settings())
        self.assertEqual(pq.digits(3), (2, 2, 2))

    def test_sweeps_pass(self):
        """Small grids of every sweep hold"""
        grids = {
            "constant-stream": default_grid("constant-stream", 200),
            "prefix": [{"x": "golden", "y": "periodic:1,1,1|2", "n": 2}],
            "append": [{"alpha": "euler", "x": "3/2", "y": "inf", "n": 10}],
            "single-substitution": [{"first": 5, "z": 2, "n": 40}],
            "all-ones": [{"alpha": "sqrt7", "n": 12}],
            "ratio": [{"alpha": "golden", "n0": 10, "n1": 100}],
            "infinite-tail": [{"alpha": "increasing", "n": 20}],
            "monotonicity": [{"alpha": "euler", "k": 3, "n": 8}],
            "basic": [{"alpha": "golden", "n": 30, "t": ["1", "5/2", "100"]}],
            "initial-y": [{"alpha": "euler", "y0": "1/2", "n": 50}],
        }
        for which, grid in grids.items():
            report = run_bound_sweep(which, grid, make_settings())
            self.assertTrue(report.passed, report.to_json())

    def test_sweep_reports_pattern_errors(self):
        """A cell whose streams do not fit the check is reported, not passed"""
        report = run_bound_sweep("prefix", [{"x": "golden", "y": "silver", "n": 3}], make_settings())
        self.assertFalse(report.passed)
        self.assertEqual(report.errors[0]["error"], "PatternError")


class TestSettings(unittest.TestCase):
    """Test environment settings"""

    def test_from_env_reads_every_field(self):
        env = {"DAL_PRECISION_BITS": "25", "DAL_INTERVAL_PREC": "200", "DAL_WORKERS": "3", "DAL_RANDOM_BITS": "8192"}
        with mock.patch.dict(os.environ, env):
            settings = Settings.from_env()
        self.assertEqual(
            (settings.tail_depth, settings.interval_prec, settings.workers, settings.bits),
            (25, 200, 3, 8192),
        )
        cfg = ExperimentConfig.with_settings(settings, trials=2)
        self.assertEqual(cfg.bits_B, 8192)
        self.assertEqual(ExperimentConfig.with_settings(settings, bits_B=4096).bits_B, 4096)

    def test_from_env_defaults_and_errors(self):
        with mock.patch.dict(os.environ, {"DAL_RANDOM_BITS": ""}):
            self.assertEqual(Settings.from_env().bits, 100_000)
        with mock.patch.dict(os.environ, {"DAL_RANDOM_BITS": "lots"}):
            with self.assertRaises(ValueError):
                Settings.from_env()


class TestFileOperations(unittest.TestCase):
    """Test file operations and data handling"""

    def test_presets_file(self):
        """Test that the presets file exists and is valid JSON"""
        presets_file = Path("data/alpha_presets.json")
        self.assertTrue(presets_file.exists())

        with open(presets_file, 'r') as f:
            data = json.load(f)

        self.assertIsInstance(data, dict)
        self.assertIn("golden", data)

    def test_formulas_in_docs(self):
        """README and the home page state I as the plain integral of psi and G_n from S_1"""
        readme = Path("README.md").read_text(encoding="utf-8")
        home = Path("main.py").read_text(encoding="utf-8")
        for text in (readme, home):
            self.assertIn("I_α(t) = ∫₁ᵗ ψ_α(ξ) dξ", text)
            self.assertNotIn("dt/t", text)
        self.assertIn("G_n = S_1 + … + S_n", readme)
        self.assertNotIn("S_0", readme)
        self.assertIn("DAL_RANDOM_BITS", Path("env_example.txt").read_text(encoding="utf-8"))

    def test_requirements_file(self):
        """Test that requirements file exists"""
        requirements_file = Path("requirements.txt")
        self.assertTrue(requirements_file.exists())

        with open(requirements_file, 'r') as f:
            content = f.read()

        for package in ("streamlit", "numpy", "mpmath", "pydantic", "matplotlib"):
            self.assertIn(package, content)


@unittest.skipUnless(FULL_ACCEPTANCE, "set DAL_FULL_ACCEPTANCE=1 for the full-size runs")
class TestAcceptance(unittest.TestCase):
    """Full-size runs"""

    def test_average_experiment(self):
        summary = run_experiment("average", ExperimentConfig(trials=200, digits_n=10_000, master_seed=20240101))
        self.assertTrue(summary.passed, summary.to_json())

    def test_levy_experiment(self):
        summary = run_experiment("levy", ExperimentConfig(trials=200, digits_n=10_000, master_seed=20240101))
        self.assertTrue(summary.passed, summary.to_json())

    def test_orbit_equivalence(self):
        dynamics = GaussDynamics(make_settings())
        for seed in range(50):
            pq = extract_digits(8192, derive_trial_seed(20240101, seed))
            assert_orbits_agree(self, dynamics, pq, Fraction(1, 3), 1000)

    def test_pair_experiment(self):
        summary = run_experiment("pair", ExperimentConfig(trials=100, digits_n=10_000, master_seed=20240101))
        self.assertGreaterEqual(summary.pass_fraction, 0.95, summary.to_json())
        self.assertTrue(summary.passed, summary.to_json())

    def test_construction_envelope(self):
        extremal = ExtremalSums(make_settings())
        for d in (Fraction(3, 10), Fraction(2, 5), Fraction(3, 4), Fraction(9, 10)):
            construction = extremal.construct_alpha(d, n_digits=100_000)
            checks = extremal.check_construction(construction, [1000, 10_000, 100_000])
            self.assertTrue(all(check.holds for check in checks), d)

    def test_quadrature_width(self):
        first, second = GaussDynamics.gauss_density_integrals(2 ** 12)
        self.assertLess(float(first.width), 1e-6)
        self.assertLess(float(second.width), 1e-6)


def run_tests():
    """Run all tests"""
    print("🧪 Running Irrationality Measure Explorer Tests")
    print("=" * 50)

    # Create test suite
    test_suite = unittest.TestSuite()

    # Add test classes
    test_classes = [
        TestContinuedFractions,
        TestMeasureFunction,
        TestExtremalSums,
        TestGaussDynamics,
        TestExperiments,
        TestSettings,
        TestFileOperations,
        TestAcceptance,
    ]

    for test_class in test_classes:
        tests = unittest.TestLoader().loadTestsFromTestCase(test_class)
        test_suite.addTests(tests)

    # Run tests
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(test_suite)

    # Print summary
    print("=" * 50)
    print(f"Tests run: {result.testsRun}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")

    if result.failures:
        print("\n❌ Failures:")
        for test, traceback in result.failures:
            print(f"  - {test}: {traceback}")

    if result.errors:
        print("\n❌ Errors:")
        for test, traceback in result.errors:
            print(f"  - {test}: {traceback}")

    if result.wasSuccessful():
        print("\n✅ All tests passed!")
    else:
        print("\n❌ Some tests failed!")

    return result.wasSuccessful()

if __name__ == "__main__":
    success = run_tests()
    exit(0 if success else 1)
