#!/usr/bin/env python3
"""
Tests for the command-line front end
"""

import csv
import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from fractions import Fraction
from pathlib import Path
from unittest import mock

import cli
from experiments import SweepReport
from utils.bound_checks import below
from utils.interval_utils import MeasuredValue
from utils.plot_utils import line_count, step_count


def run_cli(*argv):
    """Exit code and stdout of one invocation"""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestCommandLine(unittest.TestCase):
    """Test verbs, output formats and exit codes"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        import shutil
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_sz(self):
        """sz prints S(z) exactly and as an enclosure"""
        code, out = run_cli("sz", "--z", "2")
        self.assertEqual(code, 0)
        row = rows(out)[0]
        self.assertEqual(row["S"], "1/2")
        self.assertLessEqual(Fraction(row["S_lo"]), Fraction(1, 2))
        self.assertGreaterEqual(Fraction(row["S_hi"]), Fraction(1, 2))

    def test_digits_and_convergents(self):
        code, out = run_cli("digits", "--alpha", "euler", "--n", "5")
        self.assertEqual(code, 0)
        self.assertEqual([r["digit"] for r in rows(out)], ["1", "2", "1", "1", "4"])

        code, out = run_cli("convergents", "--alpha", "golden", "--n", "5")
        self.assertEqual(code, 0)
        self.assertEqual([r["q"] for r in rows(out)], ["0", "1", "1", "2", "3", "5", "8"])

        code, out = run_cli("digits", "--seed", "5", "--bits", "512", "--n", "10")
        self.assertEqual(code, 0)
        self.assertEqual(len(rows(out)), 10)

    def test_psi_and_trace(self):
        code, out = run_cli("psi", "--alpha", "7/10", "--t", "2")
        self.assertEqual(code, 0)
        row = rows(out)[0]
        self.assertEqual(row["nu"], "1")
        self.assertLessEqual(Fraction(row["psi_lo"]), Fraction(3, 10))
        self.assertGreaterEqual(Fraction(row["psi_hi"]), Fraction(3, 10))

        code, out = run_cli("psi", "--alpha", "golden", "--t", "13", "--trace")
        self.assertEqual(code, 0)
        self.assertEqual(len(rows(out)), 5)

    def test_integral_of_rational(self):
        """I(10) for 7/10 is 13/10"""
        code, out = run_cli("integral", "--alpha", "7/10", "--t", "10")
        self.assertEqual(code, 0)
        row = rows(out)[0]
        self.assertLessEqual(Fraction(row["I_lo"]), Fraction(13, 10))
        self.assertGreaterEqual(Fraction(row["I_hi"]), Fraction(13, 10))

    def test_integral_trace_json(self):
        code, out = run_cli("integral", "--alpha", "euler", "--trace", "--n", "12", "--format", "json")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual(len(data), 12)
        self.assertEqual(data[-1]["nu"], "12")

    def test_gsum_with_tail(self):
        code, out = run_cli("gsum", "--alpha", "7/10", "--n", "3", "--tail", "inf")
        self.assertEqual(code, 0)
        row = rows(out)[0]
        self.assertLessEqual(Fraction(row["G_lo"]), Fraction(13, 10))
        self.assertGreaterEqual(Fraction(row["G_hi"]), Fraction(13, 10))

    def test_construct_json(self):
        code, out = run_cli("construct", "--d", "2/5", "--n", "500", "--format", "json")
        self.assertEqual(code, 0)
        data = json.loads(out)
        self.assertEqual((data["a"], data["b"]), (1, 2))
        self.assertEqual(sum(data["block_lengths"]), data["W"][-1])

    def test_dynamics_verbs(self):
        code, out = run_cli("orbit", "--alpha", "euler", "--n", "4")
        self.assertEqual(code, 0)
        self.assertEqual(len(rows(out)), 5)

        code, out = run_cli("birkhoff", "--alpha", "euler", "--n", "50", "--y0", "1/2")
        self.assertEqual(code, 0)
        self.assertEqual(rows(out)[0]["n"], "50")

        code, out = run_cli("levy", "--alpha", "golden", "--n", "200")
        self.assertEqual(code, 0)

        code, out = run_cli("quadrature", "--n", "256")
        self.assertEqual(code, 0)
        first, second = rows(out)
        self.assertLess(Fraction(first["value_lo"]), Fraction("0.3465735903"))
        self.assertGreater(Fraction(first["value_hi"]), Fraction("0.3465735903"))
        self.assertLessEqual(Fraction(second["value_lo"]), 1)
        self.assertGreaterEqual(Fraction(second["value_hi"]), 1)

    def test_experiment_json(self):
        code, out = run_cli("experiment", "levy", "--trials", "2", "--n", "100", "--seed", "3", "--bits", "2048")
        self.assertEqual(code, 0)
        summary = json.loads(out)
        self.assertEqual(summary["experiment"], "levy")
        self.assertEqual(summary["n_trials"], 2)
        self.assertEqual(summary["config"]["bits_B"], 2048)

    def test_sweep_with_grid(self):
        grid = Path(self.temp_dir) / "grid.json"
        grid.write_text(json.dumps([{"z": 2, "n": 50}, {"z": "5/2", "n": 50}]))
        code, out = run_cli("sweep", "constant-stream", "--grid", str(grid))
        self.assertEqual(code, 0)
        self.assertTrue(json.loads(out)["passed"])

    def test_sweep_errors_exit_one(self):
        grid = Path(self.temp_dir) / "grid.json"
        grid.write_text(json.dumps([{"x": "golden", "y": "silver", "n": 3}]))
        code, out = run_cli("sweep", "prefix", "--grid", str(grid))
        self.assertEqual(code, 1)
        self.assertEqual(len(json.loads(out)["errors"]), 1)

    def test_sweep_violation_exits_three(self):
        report = SweepReport(which="constant-stream", checks=[
            below("constant-stream deviation", MeasuredValue.exact(5), 4, z="2", n=10)])
        with mock.patch.object(cli, "run_bound_sweep", return_value=report):
            code, out = run_cli("sweep", "constant-stream")
        self.assertEqual(code, 3)
        self.assertFalse(json.loads(out)["passed"])

    def test_plot_from_trace(self):
        trace = Path(self.temp_dir) / "psi.csv"
        svg = Path(self.temp_dir) / "psi.svg"
        self.assertEqual(run_cli("psi", "--alpha", "golden", "--t", "13", "--trace", "--out", str(trace))[0], 0)
        code, _ = run_cli("plot", "--input", str(trace), "--out", str(svg))
        self.assertEqual(code, 0)
        self.assertEqual(step_count(svg.read_text()), 5)

    def test_plot_accepts_every_csv(self):
        """Digits, convergents, orbits and single-row results all plot as lines"""
        verbs = {
            "digits": ("digits", "--alpha", "euler", "--n", "12"),
            "convergents": ("convergents", "--alpha", "golden", "--n", "12"),
            "orbit": ("orbit", "--alpha", "euler", "--y0", "1/3", "--n", "8"),
            "psi": ("psi", "--alpha", "golden", "--t", "5"),
            "integral": ("integral", "--alpha", "golden", "--t", "25/2"),
            "gsum": ("gsum", "--alpha", "euler", "--n", "10"),
            "sz": ("sz", "--z", "3"),
            "birkhoff": ("birkhoff", "--alpha", "euler", "--n", "30"),
            "quadrature": ("quadrature", "--n", "16"),
            "levy": ("levy", "--alpha", "golden", "--n", "50"),
        }
        for name, argv in verbs.items():
            csv_path = Path(self.temp_dir) / f"{name}.csv"
            svg_path = Path(self.temp_dir) / f"{name}.svg"
            self.assertEqual(run_cli(*argv, "--out", str(csv_path))[0], 0, name)
            code, _ = run_cli("plot", "--input", str(csv_path), "--out", str(svg_path))
            self.assertEqual(code, 0, name)
            svg = svg_path.read_text()
            self.assertIn("<svg", svg, name)
            self.assertGreaterEqual(line_count(svg), 1, name)
        self.assertGreaterEqual(line_count((Path(self.temp_dir) / "orbit.svg").read_text()), 3)

    def test_exit_codes(self):
        """Usage and domain errors exit 1, missing digits 2"""
        self.assertEqual(run_cli("psi", "--alpha", "bogus", "--t", "2")[0], 1)
        self.assertEqual(run_cli("psi", "--t", "2", "--unknown")[0], 1)
        self.assertEqual(run_cli("nonsense")[0], 1)
        self.assertEqual(run_cli("psi", "--alpha", "golden", "--t", "1/2")[0], 1)
        self.assertEqual(run_cli("sz", "--z", "1/2")[0], 1)
        self.assertEqual(run_cli("psi", "--alpha", "[0;1,2,3...]", "--t", "100")[0], 2)

    def test_malformed_trace(self):
        bad = Path(self.temp_dir) / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        self.assertEqual(run_cli("plot", "--input", str(bad))[0], 1)


if __name__ == "__main__":
    unittest.main()
