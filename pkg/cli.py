"""
Command-line front end

    python cli.py psi --alpha golden --t 5/2
    python cli.py sz --z 2
    python cli.py experiment average --trials 10 --n 1000 --seed 42

Exit codes: 0 success, 1 usage error, 2 precision or missing digits, 3 bound violation.
"""

import argparse
import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

from extremal_sums import ExtremalSums
from experiments import (
    EXPERIMENTS,
    SWEEPS,
    default_grid,
    resolve_alpha,
    run_bound_sweep,
    run_experiment,
)
from gauss_dynamics import ORBIT_HEADER, GaussDynamics
from measure_function import INTEGRAL_TRACE_HEADER, PSI_TRACE_HEADER, MeasureFunction
from utils.config import ExperimentConfig, Settings
from utils.continued_fractions import convergents, extract_digits
from utils.errors import (
    BoundViolationError,
    ContinuedFractionError,
    DomainError,
    InsufficientPrecisionError,
    NeedsMoreDigitsError,
    PatternError,
)
from utils.interval_utils import format_lower, format_upper
from utils.plot_utils import plot_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PRECISION = 2
EXIT_VIOLATION = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad input; usage errors here exit with 1"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(parser: argparse.ArgumentParser, alpha: bool = True):
    if alpha:
        parser.add_argument("--alpha", default="golden",
                            help="golden | [0;a1,a2,...] | periodic:pre|rep | random:seed | file:path | construct:d | p/q")
    parser.add_argument("--depth", type=int, default=None, help="Tail bracket depth (default: DAL_PRECISION_BITS or 40)")
    parser.add_argument("--bits", type=int, default=None, help="Bits of the random sample for random:seed")
    parser.add_argument("--out", default=None, help="Write output here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cli.py", description="Irrationality measure function toolkit")
    sub = parser.add_subparsers(dest="verb", metavar="verb", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("digits", help="Partial quotients of alpha, or of a seeded random number")
    _add_common(p)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--seed", type=int, default=None, help="Extract digits of a random number with this seed")

    p = sub.add_parser("convergents", help="Convergents p_nu/q_nu")
    _add_common(p)
    p.add_argument("--n", type=int, default=20)

    p = sub.add_parser("psi", help="psi_alpha(t), or its step trace up to t with --trace")
    _add_common(p)
    p.add_argument("--t", required=True)
    p.add_argument("--trace", action="store_true")

    p = sub.add_parser("integral", help="I_alpha(t) = G_N + A, or the G_nu trace up to --n with --trace")
    _add_common(p)
    p.add_argument("--t", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--trace", action="store_true")

    p = sub.add_parser("gsum", help="G_n, or G_n(alpha, x) with a real last argument")
    _add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tail", default=None, help="Real alpha_{n+1} (rational or inf)")

    p = sub.add_parser("sz", help="Closed form S(z)")
    _add_common(p, alpha=False)
    p.add_argument("--z", required=True)

    p = sub.add_parser("construct", help="Digits with average G_n/n tending to d")
    _add_common(p, alpha=False)
    p.add_argument("--d", required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--stride", type=int, default=None, help="Trace every stride-th n (csv format)")

    p = sub.add_parser("orbit", help="Orbit of (alpha, y0) under the natural extension")
    _add_common(p)
    p.add_argument("--y0", default="0")
    p.add_argument("--n", type=int, default=20)

    p = sub.add_parser("birkhoff", help="Mean of f(x, y) = (1 - y)/(1 + xy) along the orbit")
    _add_common(p)
    p.add_argument("--y0", default="0")
    p.add_argument("--n", type=int, default=1000)

    p = sub.add_parser("quadrature", help="Certified integrals of the natural extension densities")
    _add_common(p, alpha=False)
    p.add_argument("--n", type=int, default=2 ** 12, help="Grid resolution")

    p = sub.add_parser("levy", help="(ln q_n)/n")
    _add_common(p)
    p.add_argument("--n", type=int, default=1000)

    p = sub.add_parser("experiment", help="Seeded Monte Carlo experiment")
    _add_common(p, alpha=False)
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=None, help="Override the mean tolerance")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--alpha", default=None, help="Use this alpha in every trial instead of a random one")
    p.add_argument("--beta", default=None, help="Second number of each pair (pair experiment)")

    p = sub.add_parser("sweep", help="Check a family of inequalities over a parameter grid")
    _add_common(p, alpha=False)
    p.add_argument("which", choices=SWEEPS)
    p.add_argument("--grid", default=None, help="JSON file with a list of grid cells")
    p.add_argument("--n", type=int, default=None, help="Size used by the default grid")

    p = sub.add_parser("plot", help="SVG plot of any CSV the other verbs write")
    p.add_argument("--input", default="-", help="CSV path, - for stdin")
    p.add_argument("--title", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _settings(args) -> Settings:
    settings = Settings.from_env()
    updates = {}
    if getattr(args, "depth", None) is not None:
        updates["tail_depth"] = args.depth
    if getattr(args, "bits", None) is not None:
        updates["bits"] = args.bits
    return settings.model_copy(update=updates) if updates else settings


def _write(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _table(rows: List[Dict[str, str]], header: List[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buffer.getvalue()


def _measured(prefix: str, value) -> Dict[str, str]:
    return {f"{prefix}_lo": format_lower(value.lo), f"{prefix}_hi": format_upper(value.hi)}


def cmd_digits(args, settings: Settings) -> int:
    if args.seed is not None:
        pq = extract_digits(settings.bits, args.seed)
    else:
        pq = resolve_alpha(args.alpha, settings)
    n = pq.available(args.n)
    rows = [{"nu": str(nu), "digit": str(a)} for nu, a in enumerate(pq.digits(n), start=1)]
    _write(_table(rows, ["nu", "digit"], args.format), args.out)
    return EXIT_OK


def cmd_convergents(args, settings: Settings) -> int:
    pq = resolve_alpha(args.alpha, settings)
    rows = [{"nu": str(c.nu), "p": str(c.p), "q": str(c.q)} for c in convergents(pq, args.n)]
    _write(_table(rows, ["nu", "p", "q"], args.format), args.out)
    return EXIT_OK


def cmd_psi(args, settings: Settings) -> int:
    pq = resolve_alpha(args.alpha, settings)
    measure = MeasureFunction(settings)
    if args.trace:
        rows = measure.psi_trace(pq, Fraction(args.t))
        _write(_table(rows, PSI_TRACE_HEADER, args.format), args.out)
        return EXIT_OK
    psi = measure.psi_at(pq, Fraction(args.t))
    row = {"t": str(Fraction(args.t)), "nu": str(psi.nu), **_measured("psi", psi.value)}
    _write(_table([row], ["t", "nu", "psi_lo", "psi_hi"], args.format), args.out)
    return EXIT_OK


def cmd_integral(args, settings: Settings) -> int:
    pq = resolve_alpha(args.alpha, settings)
    measure = MeasureFunction(settings)
    if args.trace:
        if args.n is None:
            raise UsageError("integral --trace needs --n")
        _write(_table(measure.integral_trace(pq, args.n), INTEGRAL_TRACE_HEADER, args.format), args.out)
        return EXIT_OK
    if args.t is None:
        raise UsageError("integral needs --t (or --trace --n)")
    breakdown = measure.integral_I(pq, Fraction(args.t))
    row = {
        "t": str(breakdown.t),
        "N": str(breakdown.N),
        **_measured("G_N", breakdown.G_N),
        **_measured("A", breakdown.A),
        **_measured("I", breakdown.total),
    }
    header = ["t", "N", "G_N_lo", "G_N_hi", "A_lo", "A_hi", "I_lo", "I_hi"]
    _write(_table([row], header, args.format), args.out)
    return EXIT_OK


def cmd_gsum(args, settings: Settings) -> int:
    pq = resolve_alpha(args.alpha, settings)
    if args.tail is None:
        G = MeasureFunction(settings).partial_sum_G(pq, args.n)
    else:
        G = ExtremalSums(settings).sum_with_tail(pq, args.n, args.tail)
    row = {"n": str(args.n), "tail": args.tail or "", **_measured("G", G)}
    _write(_table([row], ["n", "tail", "G_lo", "G_hi"], args.format), args.out)
    return EXIT_OK


def cmd_sz(args, settings: Settings) -> int:
    extremal = ExtremalSums(settings)
    S = extremal.S_closed(args.z)
    row = {"z": args.z, "S": str(S), **_measured("S", extremal.S_measured(args.z))}
    _write(_table([row], ["z", "S", "S_lo", "S_hi"], args.format), args.out)
    return EXIT_OK


def cmd_construct(args, settings: Settings) -> int:
    extremal = ExtremalSums(settings)
    construction = extremal.construct_alpha(args.d, n_digits=args.n)
    if args.format == "json":
        payload = {"d": str(construction.d), "digits": construction.digits.serialize(60)}
        if construction.spec is not None:
            payload.update(construction.spec.to_dict())
        _write(json.dumps(payload, indent=2) + "\n", args.out)
        return EXIT_OK
    stride = args.stride or max(1, args.n // 1000)
    rows = []
    for n in range(stride, args.n + 1, stride):
        G = extremal.construction_ratio(construction, n).scaled(n)
        rows.append({"nu": str(n), **_measured("G_nu", G)})
    _write(_table(rows, ["nu", "G_nu_lo", "G_nu_hi"], args.format), args.out)
    return EXIT_OK


def cmd_orbit(args, settings: Settings) -> int:
    pq = resolve_alpha(args.alpha, settings)
    rows = GaussDynamics(settings).orbit_rows(pq, Fraction(args.y0), args.n)
    _write(_table(rows, ORBIT_HEADER, args.format), args.out)
    return EXIT_OK


def cmd_birkhoff(args, settings: Settings) -> int:
    pq = resolve_alpha(args.alpha, settings)
    accumulator = GaussDynamics(settings).birkhoff_mean_f(pq, Fraction(args.y0), args.n)
    row = {"n": str(accumulator.n), **_measured("sum", accumulator.sum), **_measured("mean", accumulator.mean)}
    _write(_table([row], ["n", "sum_lo", "sum_hi", "mean_lo", "mean_hi"], args.format), args.out)
    return EXIT_OK


def cmd_quadrature(args, settings: Settings) -> int:
    first, second = GaussDynamics.gauss_density_integrals(args.n)
    rows = [
        {"integral": "(1-y)/(1+xy)^3", "expected": "ln2/2", **_measured("value", first)},
        {"integral": "1/(ln2 (1+xy)^2)", "expected": "1", **_measured("value", second)},
    ]
    _write(_table(rows, ["integral", "expected", "value_lo", "value_hi"], args.format), args.out)
    return EXIT_OK


def cmd_levy(args, settings: Settings) -> int:
    pq = resolve_alpha(args.alpha, settings)
    ratio = GaussDynamics.levy_ratio(pq, args.n)
    row = {"n": str(args.n), **_measured("levy", ratio)}
    _write(_table([row], ["n", "levy_lo", "levy_hi"], args.format), args.out)
    return EXIT_OK


def cmd_experiment(args, settings: Settings) -> int:
    overrides = {
        "trials": args.trials,
        "digits_n": args.n,
        "master_seed": args.seed,
        "bits_B": args.bits,
        "workers": args.workers,
        "alpha_override": args.alpha,
        "beta_override": args.beta,
        "output": args.out,
    }
    if args.tolerance is not None:
        key = {"average": "mean_tolerance_g", "levy": "mean_tolerance_levy", "pair": "pair_gap_bound"}[args.name]
        overrides[key] = args.tolerance
        if args.name == "average":
            overrides["mean_tolerance_i"] = args.tolerance
    cfg = ExperimentConfig.with_settings(settings, **overrides)
    summary = run_experiment(args.name, cfg)
    sys.stdout.write(summary.to_json() + "\n")
    return EXIT_OK


def cmd_sweep(args, settings: Settings) -> int:
    if args.grid:
        try:
            grid = json.loads(Path(args.grid).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"Cannot read grid {args.grid}: {e}")
    else:
        grid = default_grid(args.which, args.n) if args.n else None
    report = run_bound_sweep(args.which, grid, settings)
    _write(report.to_json() + "\n", args.out)
    if report.violations:
        return EXIT_VIOLATION
    if report.errors:
        return EXIT_USAGE
    return EXIT_OK


def cmd_plot(args, settings: Settings) -> int:
    if args.input == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.input).read_text()
        except OSError as e:
            raise UsageError(f"Cannot read {args.input}: {e}")
    _write(plot_trace(text, args.title), args.out)
    return EXIT_OK


COMMANDS = {
    "digits": cmd_digits,
    "convergents": cmd_convergents,
    "psi": cmd_psi,
    "integral": cmd_integral,
    "gsum": cmd_gsum,
    "sz": cmd_sz,
    "construct": cmd_construct,
    "orbit": cmd_orbit,
    "birkhoff": cmd_birkhoff,
    "quadrature": cmd_quadrature,
    "levy": cmd_levy,
    "experiment": cmd_experiment,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one verb; returns the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE

    level = logging.WARNING
    if args.verbose == 1:
        level = logging.INFO
    elif args.verbose > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s", stream=sys.stderr)

    try:
        return COMMANDS[args.verb](args, _settings(args))
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except BoundViolationError as e:
        logger.error("Bound violated: %s (replay %s)", e, e.replay)
        return EXIT_VIOLATION
    except (NeedsMoreDigitsError, InsufficientPrecisionError) as e:
        logger.error("%s", e)
        return EXIT_PRECISION
    except (DomainError, PatternError, ContinuedFractionError) as e:
        logger.error("%s", e)
        return EXIT_USAGE
    except (ValueError, ZeroDivisionError) as e:
        logger.error("Invalid argument: %s", e)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
