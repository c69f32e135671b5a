import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import streamlit as st
from mpmath import iv

from extremal_sums import ExtremalSums
from gauss_dynamics import GaussDynamics, levy_constant
from measure_function import MeasureFunction
from utils.bound_checks import BoundCheck, below, violations
from utils.config import ExperimentConfig, Settings
from utils.continued_fractions import PartialQuotients, convergent_table, extract_digits
from utils.errors import (
    ContinuedFractionError,
    DomainError,
    InsufficientPrecisionError,
    NeedsMoreDigitsError,
    PatternError,
)
from utils.interval_utils import MeasuredValue, format_lower, format_upper, interval_precision, iv_lo, iv_hi

logger = logging.getLogger(__name__)

EXPERIMENTS = ("average", "pair", "levy")

COMMON_HEADER = ["trial", "seed", "bits", "digits", "retries", "status"]
HEADERS = {
    "average": COMMON_HEADER + ["g_ratio_lo", "g_ratio_hi", "i_ratio_lo", "i_ratio_hi", "pass"],
    "levy": COMMON_HEADER + ["levy_lo", "levy_hi", "pass"],
    "pair": COMMON_HEADER + ["seed_beta", "sign_changes", "min_abs_d_hi", "adjacent_abs_d_hi", "final_d_lo", "final_d_hi", "slope", "pass"],
}


def targets() -> Dict[str, float]:
    """Almost-everywhere limits: G_n/n -> 1/2, I/ln t -> 6 ln2/pi^2, ln q_n/n -> pi^2/(12 ln 2)"""
    with interval_precision(64):
        return {
            "g_ratio": 0.5,
            "i_ratio": float((6 * iv.log(2) / iv.pi ** 2).mid),
            "levy": float(levy_constant().mid),
        }


def derive_trial_seed(master_seed: int, trial_index: int, stream: int = 0) -> int:
    """64-bit seed for one trial; a pure function of its arguments"""
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index, stream))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def resolve_alpha(text: str, settings: Optional[Settings] = None, digits: int = 10_000) -> PartialQuotients:
    """
    Parse the alpha grammar, including ``construct:d`` for a number whose
    average G_n/n tends to d
    """
    text = text.strip()
    if text.startswith("construct:"):
        construction = ExtremalSums(settings).construct_alpha(text.split(":", 1)[1], n_digits=digits)
        return construction.digits
    bits = settings.bits if settings else None
    return PartialQuotients.parse(text, bits=bits)


@dataclass
class TrialRecord:
    """One trial; reproducible from (master_seed, trial_index, config)"""

    trial_index: int
    seed: int
    bits: int
    digits: Optional[int] = None
    retries: int = 0
    status: str = "ok"
    values: Dict[str, MeasuredValue] = field(default_factory=dict)
    extras: Dict[str, Any] = field(default_factory=dict)
    passed: bool = False

    def to_row(self, header: List[str]) -> Dict[str, str]:
        row = {
            "trial": str(self.trial_index),
            "seed": str(self.seed),
            "bits": str(self.bits),
            "digits": "" if self.digits is None else str(self.digits),
            "retries": str(self.retries),
            "status": self.status,
            "pass": "1" if self.passed else "0",
        }
        for name, value in self.values.items():
            row[f"{name}_lo"] = format_lower(value.lo)
            row[f"{name}_hi"] = format_upper(value.hi)
        for name, value in self.extras.items():
            row[name] = str(value)
        return {column: row.get(column, "") for column in header}


@dataclass
class ExperimentSummary:
    experiment: str
    config: ExperimentConfig
    records: List[TrialRecord]
    mean: Dict[str, float]
    stderr: Dict[str, float]
    pass_fraction: float
    passed: bool
    violations: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "config": self.config.model_dump(),
            "n_trials": len(self.records),
            "mean": self.mean,
            "stderr": self.stderr,
            "pass_fraction": self.pass_fraction,
            "passed": self.passed,
            "violations": self.violations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def records_csv(self) -> str:
        return write_records_csv(self.records, HEADERS[self.experiment])


def write_records_csv(records: Iterable[TrialRecord], header: List[str]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record.to_row(header))
    return buffer.getvalue()


def _settings(cfg: ExperimentConfig, bits: Optional[int] = None) -> Settings:
    return Settings(tail_depth=cfg.tail_depth, interval_prec=cfg.interval_prec, bits=bits or cfg.bits_B)


def _draw(cfg: ExperimentConfig, trial_index: int, seed: int, override: Optional[str]) -> Tuple[PartialQuotients, int, int]:
    """A digit stream with at least digits_n + 1 certified digits, doubling the bits on shortfall"""
    required = cfg.digits_n + 1
    if override:
        return resolve_alpha(override, _settings(cfg), digits=required + cfg.tail_depth), cfg.bits_B, 0
    bits = cfg.bits_B
    for retries in range(cfg.max_bit_doublings + 1):
        try:
            pq = extract_digits(bits, seed)
            if pq.certified_count >= required:
                return pq, bits, retries
            shortfall = f"{pq.certified_count} digits"
        except InsufficientPrecisionError as e:
            shortfall = str(e)
        if retries == cfg.max_bit_doublings:
            break
        logger.warning(
            "trial %d (seed %d): %s from %d bits, need %d; retrying with %d bits",
            trial_index, seed, shortfall, bits, required, bits * 2,
        )
        bits *= 2
    raise NeedsMoreDigitsError(
        f"Trial {trial_index} has fewer than {required} certified digits after {cfg.max_bit_doublings} doublings",
        required=required,
    )


def _within(value: MeasuredValue, target: float, tolerance: float) -> bool:
    return abs(float(value) - target) <= tolerance


def average_trial(cfg: ExperimentConfig, trial_index: int) -> TrialRecord:
    """G_n/n and I(q_n)/ln q_n for one random alpha"""
    seed = derive_trial_seed(cfg.master_seed, trial_index)
    record = TrialRecord(trial_index=trial_index, seed=seed, bits=cfg.bits_B)
    try:
        pq, record.bits, record.retries = _draw(cfg, trial_index, seed, cfg.alpha_override)
    except NeedsMoreDigitsError as e:
        logger.error("%s", e)
        record.status = "insufficient_digits"
        return record
    record.digits = pq.certified_count
    n = cfg.digits_n
    measure = MeasureFunction(_settings(cfg, record.bits))
    breakdown = measure.integral_at_convergent(pq, n)
    q_n = convergent_table(pq, n)[1][n + 1]
    with interval_precision(cfg.interval_prec):
        record.values["g_ratio"] = breakdown.G_N.divided(n)
        if q_n > 1:
            record.values["i_ratio"] = breakdown.total.divided(iv.log(iv.mpf(q_n)))
    goals = targets()
    record.passed = _within(record.values["g_ratio"], goals["g_ratio"], cfg.trial_tolerance_g) and (
        "i_ratio" in record.values and _within(record.values["i_ratio"], goals["i_ratio"], cfg.trial_tolerance_i)
    )
    return record


def levy_trial(cfg: ExperimentConfig, trial_index: int) -> TrialRecord:
    """(ln q_n)/n for one random alpha"""
    seed = derive_trial_seed(cfg.master_seed, trial_index)
    record = TrialRecord(trial_index=trial_index, seed=seed, bits=cfg.bits_B)
    try:
        pq, record.bits, record.retries = _draw(cfg, trial_index, seed, cfg.alpha_override)
    except NeedsMoreDigitsError as e:
        logger.error("%s", e)
        record.status = "insufficient_digits"
        return record
    record.digits = pq.certified_count
    with interval_precision(cfg.interval_prec):
        record.values["levy"] = GaussDynamics.levy_ratio(pq, cfg.digits_n)
    record.passed = _within(record.values["levy"], targets()["levy"], cfg.trial_tolerance_levy)
    return record


def pair_trial(cfg: ExperimentConfig, trial_index: int) -> TrialRecord:
    """D_n = G_n(alpha) - G_n(beta) for n <= digits_n on an independent pair"""
    seed = derive_trial_seed(cfg.master_seed, trial_index, stream=0)
    seed_beta = derive_trial_seed(cfg.master_seed, trial_index, stream=1)
    record = TrialRecord(trial_index=trial_index, seed=seed, bits=cfg.bits_B)
    record.extras["seed_beta"] = seed_beta
    try:
        alpha, bits_a, retries_a = _draw(cfg, trial_index, seed, cfg.alpha_override)
        beta, bits_b, retries_b = _draw(cfg, trial_index, seed_beta, cfg.beta_override)
    except NeedsMoreDigitsError as e:
        logger.error("%s", e)
        record.status = "insufficient_digits"
        return record
    record.bits = max(bits_a, bits_b)
    record.retries = retries_a + retries_b
    counts = [c for c in (alpha.certified_count, beta.certified_count) if c is not None]
    record.digits = min(counts) if counts else None

    n = cfg.digits_n
    measure = MeasureFunction(_settings(cfg, record.bits))
    with interval_precision(cfg.interval_prec):
        sums_a = measure.running_sums(alpha, n)
        sums_b = measure.running_sums(beta, n)
        sign_changes = 0
        last_sign = 0
        last_top = None
        smallest = None
        adjacent = None
        for m in range(1, n + 1):
            D = sums_a[m] - sums_b[m]
            top = iv_hi(abs(D))
            if smallest is None or top < smallest:
                smallest = top
            sign = 1 if iv_lo(D) > 0 else -1 if iv_hi(D) < 0 else 0
            if not sign:
                continue
            if last_sign and sign != last_sign:
                sign_changes += 1
                # |D| on either side of the crossing
                near = min(last_top, top)
                if adjacent is None or near < adjacent:
                    adjacent = near
            last_sign = sign
            last_top = top
        final = MeasuredValue.from_interval(sums_a[n] - sums_b[n])
        half = (n + 1) // 2
        slope = float(((sums_a[n] - sums_b[n]) - (sums_a[half] - sums_b[half])).mid) / (n - half) if n > half else 0.0
    record.values["final_d"] = final
    record.extras.update(
        sign_changes=sign_changes,
        min_abs_d_hi=format_upper(smallest),
        adjacent_abs_d_hi="" if adjacent is None else format_upper(adjacent),
        slope=f"{slope:.6f}",
    )
    # a pair that never crosses has not come back within the gap
    record.passed = adjacent is not None and float(adjacent) <= cfg.pair_gap_bound
    if not record.passed:
        logger.info("pair %d: %d sign changes, no crossing within %s", trial_index, sign_changes, cfg.pair_gap_bound)
    return record


TRIALS: Dict[str, Callable[[ExperimentConfig, int], TrialRecord]] = {
    "average": average_trial,
    "levy": levy_trial,
    "pair": pair_trial,
}


def _run_trial(job: Tuple[str, ExperimentConfig, int]) -> TrialRecord:
    kind, cfg, index = job
    return TRIALS[kind](cfg, index)


def run_trials(kind: str, cfg: ExperimentConfig) -> List[TrialRecord]:
    """Every trial, in trial order whatever the worker count"""
    jobs = [(kind, cfg, index) for index in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_run_trial, jobs))
    else:
        records = [_run_trial(job) for job in jobs]
    return sorted(records, key=lambda record: record.trial_index)


def _fold(records: List[TrialRecord], names: Iterable[str]) -> Tuple[Dict[str, float], Dict[str, float]]:
    mean, stderr = {}, {}
    for name in names:
        values = np.array([float(r.values[name]) for r in records if name in r.values])
        if values.size == 0:
            continue
        mean[name] = float(values.mean())
        stderr[name] = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return mean, stderr


def _summarize(kind: str, cfg: ExperimentConfig, records: List[TrialRecord], tolerances: Dict[str, float]) -> ExperimentSummary:
    mean, stderr = _fold(records, tolerances)
    goals = targets()
    pass_fraction = sum(r.passed for r in records) / len(records)
    failed = [
        {"trial": r.trial_index, "seed": r.seed, "status": r.status}
        for r in records
        if not r.passed
    ]
    means_ok = all(name in mean and abs(mean[name] - goals[name]) <= tol for name, tol in tolerances.items())
    summary = ExperimentSummary(
        experiment=kind,
        config=cfg,
        records=records,
        mean=mean,
        stderr=stderr,
        pass_fraction=pass_fraction,
        passed=means_ok and pass_fraction >= cfg.pass_fraction,
        violations=failed,
    )
    logger.info("%s: %d trials, mean %s, pass fraction %.3f", kind, len(records), mean, pass_fraction)
    return summary


def run_average_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """G_n/n -> 1/2 and I(q_n)/ln q_n -> 6 ln2/pi^2 over random alpha"""
    records = run_trials("average", cfg)
    return _summarize("average", cfg, records, {"g_ratio": cfg.mean_tolerance_g, "i_ratio": cfg.mean_tolerance_i})


def run_levy(cfg: ExperimentConfig) -> ExperimentSummary:
    """(ln q_n)/n -> pi^2/(12 ln 2) over random alpha"""
    records = run_trials("levy", cfg)
    return _summarize("levy", cfg, records, {"levy": cfg.mean_tolerance_levy})


def run_pair_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """
    Fraction of independent pairs whose G_n difference changes sign with
    |D| within the gap bound next to the crossing; a run passes at cfg.pass_fraction
    """
    records = run_trials("pair", cfg)
    mean, stderr = _fold(records, ["final_d"])
    slopes = np.array([float(r.extras["slope"]) for r in records if "slope" in r.extras])
    if slopes.size:
        mean["slope"] = float(slopes.mean())
    pass_fraction = sum(r.passed for r in records) / len(records)
    summary = ExperimentSummary(
        experiment="pair",
        config=cfg,
        records=records,
        mean=mean,
        stderr=stderr,
        pass_fraction=pass_fraction,
        passed=pass_fraction >= cfg.pass_fraction,
        violations=[{"trial": r.trial_index, "seed": r.seed, "status": r.status} for r in records if not r.passed],
    )
    logger.info("pair: %d pairs, pass fraction %.3f", len(records), pass_fraction)
    return summary


RUNNERS: Dict[str, Callable[[ExperimentConfig], ExperimentSummary]] = {
    "average": run_average_experiment,
    "pair": run_pair_experiment,
    "levy": run_levy,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> ExperimentSummary:
    if name not in RUNNERS:
        raise DomainError(f"Unknown experiment {name!r}; choose from {sorted(RUNNERS)}")
    summary = RUNNERS[name](cfg)
    if cfg.output:
        write_outputs(summary, cfg.output)
    return summary


def write_outputs(summary: ExperimentSummary, path: str):
    """Trial CSV at ``path`` and the JSON summary next to it"""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(summary.records_csv())
    target.with_suffix(".json").write_text(summary.to_json())
    logger.info("wrote %s and %s", target, target.with_suffix(".json"))


# bound sweeps


@dataclass
class SweepReport:
    which: str
    checks: List[BoundCheck] = field(default_factory=list)
    errors: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def violations(self) -> List[BoundCheck]:
        return violations(self.checks)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and not self.violations and not self.errors

    def max_observed(self) -> Dict[str, str]:
        """Largest upper endpoint per check name"""
        worst: Dict[str, BoundCheck] = {}
        for check in self.checks:
            if check.name not in worst or check.observed.hi > worst[check.name].observed.hi:
                worst[check.name] = check
        return {name: format_upper(check.observed.hi) for name, check in worst.items()}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sweep": self.which,
            "cells": len(self.checks) + len(self.errors),
            "max_observed": self.max_observed(),
            "bounds": {check.name: f"{check.relation} {check.bound}" for check in self.checks},
            "violations": [check.to_row() for check in self.violations],
            "errors": self.errors,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _alpha(cell: Dict[str, Any], key: str = "alpha", settings: Optional[Settings] = None) -> PartialQuotients:
    return resolve_alpha(str(cell[key]), settings)


def _sweep_cell(which: str, cell: Dict[str, Any], settings: Settings) -> List[BoundCheck]:
    extremal = ExtremalSums(settings)
    if which == "constant-stream":
        return [extremal.check_constant_stream(cell["z"], int(cell["n"]))]
    if which == "prefix":
        return [extremal.check_prefix_insensitivity(_alpha(cell, "x", settings), _alpha(cell, "y", settings), int(cell["n"]))]
    if which == "append":
        return [extremal.check_append(_alpha(cell, settings=settings), cell["x"], cell["y"], int(cell["n"]))]
    if which == "single-substitution":
        return [extremal.check_single_substitution(int(cell["first"]), int(cell["z"]), int(cell["n"]))]
    if which == "all-ones":
        return [extremal.check_all_ones_minimality(_alpha(cell, settings=settings), int(cell["n"]))]
    if which == "ratio":
        return extremal.check_ratio_bounds(_alpha(cell, settings=settings), int(cell["n0"]), int(cell["n1"]))
    if which == "infinite-tail":
        return [extremal.check_infinite_tail_identity(_alpha(cell, settings=settings), int(cell["n"]))]
    if which == "monotonicity":
        sign = extremal.check_monotonicity(_alpha(cell, settings=settings), int(cell["k"]), int(cell["n"]),
                                           cell.get("delta", 1))
        return [below("monotonicity sign flipped", MeasuredValue.exact(-sign), 0, **cell)]
    if which == "basic":
        t_values = [Fraction(t) for t in cell.get("t", [])]
        return MeasureFunction(settings).check_basic_bounds(_alpha(cell, settings=settings), int(cell["n"]), t_values)
    if which == "initial-y":
        return [GaussDynamics(settings).check_initial_y_insensitivity(
            _alpha(cell, settings=settings), Fraction(cell["y0"]), int(cell["n"]))]
    raise DomainError(f"Unknown sweep {which!r}; choose from {sorted(SWEEPS)}")


def default_grid(which: str, n: int = 10_000) -> List[Dict[str, Any]]:
    """The grid a sweep runs when none is given"""
    if which == "constant-stream":
        return [{"z": z, "n": n} for z in (1, 2, 3, 5, 10)]
    if which == "prefix":
        cells = []
        for k in (1, 5, 20):
            shared = ",".join(["1"] * (k + 1))
            cells.append({"x": "golden", "y": f"periodic:{shared}|2", "n": k})
            cells.append({"x": "periodic:3|1,2", "y": "periodic:9|1,2", "n": k})
            cells.append({"x": "periodic:1|4", "y": "periodic:2|4", "n": k})
        return cells
    if which == "append":
        return [
            {"alpha": alpha, "x": x, "y": y, "n": k}
            for alpha in ("golden", "silver", "euler")
            for x, y in (("1", "1"), ("3/2", "inf"), ("inf", "1"), ("7", "2"))
            for k in (1, 2, 10, 50)
        ]
    if which == "single-substitution":
        return [{"first": first, "z": z, "n": k} for first in range(1, 10) for z in (1, 2, 3) for k in (1, 10, 100, 1000)]
    if which == "all-ones":
        return [{"alpha": alpha, "n": k} for alpha in ("silver", "euler", "increasing", "sqrt3") for k in (1, 5, 50)]
    if which == "ratio":
        return [{"alpha": alpha, "n0": 10, "n1": 500} for alpha in ("golden", "silver", "euler", "increasing")]
    if which == "infinite-tail":
        return [{"alpha": alpha, "n": k} for alpha in ("golden", "euler", "increasing") for k in (1, 10, 100)]
    if which == "monotonicity":
        return [{"alpha": "euler", "k": k, "n": 12} for k in (1, 2, 6, 12, 13)]
    if which == "basic":
        return [{"alpha": alpha, "n": 200, "t": ["1", "5/2", "100", "12345/7"]} for alpha in ("golden", "silver", "euler")]
    if which == "initial-y":
        return [{"alpha": "euler", "y0": y0, "n": 500} for y0 in ("1/3", "1", "9/10")]
    raise DomainError(f"Unknown sweep {which!r}; choose from {sorted(SWEEPS)}")


SWEEPS = (
    "constant-stream", "prefix", "append", "single-substitution", "all-ones",
    "ratio", "infinite-tail", "monotonicity", "basic", "initial-y",
)


def run_bound_sweep(which: str, grid: Optional[List[Dict[str, Any]]] = None,
                    settings: Optional[Settings] = None) -> SweepReport:
    """Run a checker over every grid cell; pattern and precision errors are reported, never counted as passes"""
    if which not in SWEEPS:
        raise DomainError(f"Unknown sweep {which!r}; choose from {sorted(SWEEPS)}")
    grid = default_grid(which) if grid is None else grid
    if not grid:
        raise DomainError("A sweep needs at least one grid cell")
    settings = settings or Settings.from_env()
    report = SweepReport(which=which)
    for cell in grid:
        try:
            report.checks.extend(_sweep_cell(which, cell, settings))
        except (PatternError, InsufficientPrecisionError, NeedsMoreDigitsError) as e:
            logger.error("sweep %s cell %s: %s", which, cell, e)
            report.errors.append({"cell": cell, "error": type(e).__name__, "message": str(e)})
    for check in report.violations:
        logger.error("sweep %s violated: %s", which, check.to_row())
    logger.info("sweep %s: %d checks, %d violations, %d errors",
                which, len(report.checks), len(report.violations), len(report.errors))
    return report


def render_interface():
    """Render the Streamlit page for the Monte Carlo experiments"""
    st.header("🎲 Experiments")
    st.markdown("Seeded Monte Carlo runs over random α, and sweeps of the bounds on G_n and I_α.")

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        name = st.selectbox("Experiment", EXPERIMENTS)
    with col2:
        trials = st.number_input("Trials", min_value=1, max_value=1000, value=20)
    with col3:
        digits_n = st.number_input("Digits n", min_value=1, max_value=20_000, value=1000)
    with col4:
        seed = st.number_input("Master seed", min_value=0, value=0)
    override = st.text_input("α override (optional)", value="")

    if st.button("🚀 Run"):
        try:
            cfg = ExperimentConfig.with_settings(
                Settings.from_env(),
                trials=int(trials),
                digits_n=int(digits_n),
                bits_B=max(64, int(digits_n) * 8),
                master_seed=int(seed),
                alpha_override=override or None,
            )
            with st.spinner("Running trials..."):
                summary = run_experiment(name, cfg)
            if summary.passed:
                st.success(f"Passed: mean {summary.mean}, pass fraction {summary.pass_fraction:.3f}")
            else:
                st.warning(f"Outside tolerance: mean {summary.mean}, pass fraction {summary.pass_fraction:.3f}")
            st.json(summary.to_dict())
            st.download_button("📥 Trials (CSV)", summary.records_csv(), file_name=f"{name}.csv")
        except (ContinuedFractionError, ValueError) as e:
            st.error(f"Experiment failed: {e}")

    st.subheader("Bound sweeps")
    which = st.selectbox("Sweep", SWEEPS)
    if st.button("🔍 Sweep"):
        with st.spinner("Checking..."):
            report = run_bound_sweep(which)
        if report.passed:
            st.success(f"All {len(report.checks)} checks hold")
        else:
            st.error(f"{len(report.violations)} violations, {len(report.errors)} errors")
        st.json(report.to_dict())
