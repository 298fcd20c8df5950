"""Experiment orchestration: Monte Carlo risk curves, moment checks, lower-bound sweeps and their files."""

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np

from correlated_paths import __version__
from correlated_paths.bounds import (
    CriticalBracket,
    bound_sweep,
    critical_psi,
    known_start_bound,
    monte_carlo_bound,
    unknown_start_bound,
)
from correlated_paths.choices import OutputFormatChoices, PriorChoices, SignChoices
from correlated_paths.detect import (
    ScanEngine,
    TestConfig,
    alternative_pair_probability,
    null_error_bound,
    null_pair_score_mean,
    psi_min,
    scan,
    type_ii_error_bound,
)
from correlated_paths.exceptions import ValidationError
from correlated_paths.graph import Path, TorusLattice
from correlated_paths.model import ar1_block, simulate_alternative, simulate_null
from correlated_paths.paths import (
    EITFit,
    PathClass,
    PriorSampler,
    count_paths,
    enumerate_paths,
    estimate_eit,
    hypercube_blocks,
    hypercube_centers,
    sample_class_paths,
)
from correlated_paths.rng import STREAM_BOOTSTRAP, STREAM_SIMULATION, substream, trial_index
from correlated_paths.svg import RiskCurveSVG
from correlated_paths.utils.general import describe_version
from correlated_paths.utils.scan_engines import pair_hits
from correlated_paths.utils.stats import mean_interval, wilson_interval

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("psi", "metric", "estimate", "ci_lo", "ci_hi", "theory", "trials")
RISK_METRICS = ("type_i", "type_ii_worst", "type_ii_mean", "total_risk")
CHUNK_TRIALS = 250
NULL_STREAM = 0
# Moment-check cells use their own block of cell indices under the simulation stream
MOMENT_CELL_OFFSET = 1 << 20
SUCCESS_RISK = 0.1
HALF = 0.5


@dataclass(frozen=True)
class ReportRow:
    """One (psi, metric) line of a report; ``theory`` is None where no guarantee applies."""

    psi: float
    metric: str
    estimate: float
    ci_lo: float
    ci_hi: float
    theory: object
    trials: int

    def to_json(self):
        """Return a JSON-serializable dict."""
        return {column: getattr(self, column) for column in CSV_COLUMNS}


@dataclass
class Report:
    """Rows sorted by psi, plus everything needed to reproduce them.

    Attributes:
        kind (str): ``risk_curve``, ``moment_check`` or ``lower_bound``.
        rows (list[ReportRow]): Result rows.
        config (dict): Completed experiment config, echoed verbatim.
        details (dict): Kind-specific extras (threshold, panel, fits, reports).
    """

    kind: str
    rows: list
    config: dict
    details: dict = field(default_factory=dict)

    def metric_rows(self, metric):
        """Rows of one metric, in psi order."""
        return [row for row in self.rows if row.metric == metric]

    def to_json(self):
        """Return the full nested report."""
        return {
            "kind": self.kind,
            "version": describe_version(),
            "package_version": __version__,
            "config": self.config,
            "details": self.details,
            "rows": [row.to_json() for row in self.rows],
        }


@dataclass(frozen=True)
class _ChunkTask:
    """A contiguous range of trials for one (cell, stream); the unit of parallel work."""

    d: int
    m: int
    k: int
    start: object
    oriented: bool
    t: float
    sign: str
    engine: str
    budget: int
    seed: int
    cell: int
    stream: int
    psi: float
    planted: object
    first: int
    last: int


def _count_rejections(task):
    """Run the scan test on trials ``first .. last-1`` of one stream and count rejections."""
    lattice = TorusLattice(task.d, task.m)
    path_class = PathClass(lattice, task.k, start=task.start, oriented=task.oriented)
    engine = ScanEngine.parse(task.engine, budget=task.budget)
    rejections = 0
    for trial in range(task.first, task.last):
        stream = (STREAM_SIMULATION, task.cell, trial_index(task.stream, trial))
        if task.planted is None:
            sample = simulate_null(lattice, task.seed, stream=stream)
        else:
            sample = simulate_alternative(lattice, Path(task.planted), task.psi, task.seed, stream=stream)
        rejections += int(scan(sample, path_class, task.t, task.sign, engine).rejected)
    return (task.cell, task.stream), rejections


def _execute(tasks, threads):
    """Sum rejection counts per (cell, stream); the result does not depend on ``threads``."""
    totals = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_count_rejections, tasks))
    else:
        results = [_count_rejections(task) for task in tasks]
    for key, count in results:
        totals[key] = totals.get(key, 0) + count
    return totals


def _chunks(trials):
    for first in range(0, trials, CHUNK_TRIALS):
        yield first, min(trials, first + CHUNK_TRIALS)


def planted_panel(path_class, panel_size, seed, budget):
    """Return the planted-path panel: the whole class when it fits, else a seeded random sample."""
    count = count_paths(path_class, budget=budget)
    if count.exact and count.value <= panel_size:
        logger.info("Panel covers the whole class (%s paths)", count.value)
        return list(enumerate_paths(path_class, budget=budget)), True
    return sample_class_paths(path_class, panel_size, seed), False


def _config_eit(config):
    """EIT fit given in the config, or None."""
    eta, c0 = config.bounds.get("eta"), config.bounds.get("c0")
    if eta is None or c0 is None:
        return None
    return EITFit(eta=eta, c0=c0, tail_table=(), mc_trials=0)


def _lower_bound_value(config, psi, eit):
    """Risk lower bound at ``psi`` from a configured EIT fit, or None where it does not apply."""
    if eit is None or abs(psi) >= 1.0 / 9.0:
        return None
    if config.prior == PriorChoices.HYPERCUBE:
        report = unknown_start_bound(psi, eit, hypercube_blocks(config.lattice, config.path_class.k))
    else:
        report = known_start_bound(psi, eit)
    return report.risk_bound


def _rate_row(psi, metric, successes, trials, theory):
    estimate, lo, hi = wilson_interval(successes, trials)
    return ReportRow(psi=psi, metric=metric, estimate=estimate, ci_lo=lo, ci_hi=hi, theory=theory, trials=trials)


def run_risk_curve(config):
    """Estimate type I, worst and mean type II errors, and total risk on every psi of the grid.

    Each trial has its own stream (master seed, cell, stream, trial): stream 0 holds null draws
    and stream 1 + j the draws planted on panel path j. Rejections are counted in chunks and
    summed, so results are identical for any ``threads``.
    """
    path_class = config.path_class
    engine = config.engine
    engine.build().check_admissible(path_class)
    test = TestConfig.calibrated(path_class, sign=config.sign, budget=config.budget)
    risk = config.risk
    panel, panel_exhaustive = planted_panel(path_class, risk["panel_size"], config.seed, config.budget)
    if len(panel) < risk["panel_size"] and not panel_exhaustive:
        logger.warning("Panel holds %s paths, fewer than the requested %s", len(panel), risk["panel_size"])
    grid = sorted(risk["psi_grid"])
    base = {
        "d": path_class.lattice.d,
        "m": path_class.lattice.m,
        "k": path_class.k,
        "start": path_class.start,
        "oriented": path_class.oriented,
        "t": test.t,
        "sign": str(test.sign),
        "engine": str(engine),
        "budget": config.budget,
        "seed": config.seed,
    }
    tasks = []
    for cell, psi in enumerate(grid):
        for first, last in _chunks(risk["trials"]):
            tasks.append(
                _ChunkTask(**base, cell=cell, stream=NULL_STREAM, psi=psi, planted=None, first=first, last=last)
            )
        for index, path in enumerate(panel):
            for first, last in _chunks(risk["panel_trials"]):
                tasks.append(
                    _ChunkTask(**base, cell=cell, stream=1 + index, psi=psi, planted=path.nodes, first=first, last=last)
                )
    logger.info("Running %s chunks on %s worker(s) at t=%.6g", len(tasks), config.threads, test.t)
    totals = _execute(tasks, config.threads)

    k = path_class.k
    threshold_psi = psi_min(test.t)
    eit = _config_eit(config)
    rows = []
    for cell, psi in enumerate(grid):
        null_rejections = totals.get((cell, NULL_STREAM), 0)
        misses = [risk["panel_trials"] - totals.get((cell, 1 + index), 0) for index in range(len(panel))]
        type_ii_theory = type_ii_error_bound(k) if psi >= threshold_psi else None
        type_i = _rate_row(psi, "type_i", null_rejections, risk["trials"], null_error_bound(k))
        worst = _rate_row(psi, "type_ii_worst", max(misses), risk["panel_trials"], type_ii_theory)
        mean = _rate_row(psi, "type_ii_mean", sum(misses), risk["panel_trials"] * len(panel), type_ii_theory)
        total = ReportRow(
            psi=psi,
            metric="total_risk",
            estimate=type_i.estimate + worst.estimate,
            ci_lo=type_i.ci_lo + worst.ci_lo,
            ci_hi=type_i.ci_hi + worst.ci_hi,
            theory=_lower_bound_value(config, psi, eit),
            trials=risk["trials"] + risk["panel_trials"],
        )
        marker = ReportRow(psi, "psi_min", threshold_psi, threshold_psi, threshold_psi, threshold_psi, 0)
        rows.extend([type_i, worst, mean, total, marker])
        logger.info("psi=%s: type I %.4g, worst type II %.4g", psi, type_i.estimate, worst.estimate)
    details = {
        "t": test.t,
        "sign": str(test.sign),
        "engine": str(engine),
        "engine_exact": engine.exact,
        "psi_min": threshold_psi,
        "panel_size": len(panel),
        "panel_label": "panel-exhaustive" if panel_exhaustive else "panel-worst",
        "seed": config.seed,
    }
    return Report(kind="risk_curve", rows=rows, config=config.to_json(), details=details)


def run_moment_check(config):
    """Check the planted-path pair count against its mean (k-1)q and variance bound 3 * mean.

    Only the AR(1) block along the planted path matters, so the check simulates blocks directly.
    """
    path_class = config.path_class
    test = TestConfig.calibrated(path_class, sign=config.sign, budget=config.budget)
    pair_sign = SignChoices.MINUS if test.sign == SignChoices.MINUS else SignChoices.PLUS
    k = path_class.k
    trials = config.moments["trials"]
    threshold_psi = psi_min(test.t)
    rows = []
    checks = []
    for cell, psi in enumerate(sorted(config.moments["psi_grid"])):
        if psi < threshold_psi:
            logger.warning("psi=%s lies below psi_min=%.4g; the mean bound q >= 3/5 need not hold", psi, threshold_psi)
        generator = substream(config.seed, STREAM_SIMULATION, MOMENT_CELL_OFFSET + cell)
        blocks = ar1_block(generator.standard_normal((trials, k)), psi)
        positions = np.arange(k)
        scores = np.count_nonzero(
            pair_hits(blocks, (Ellipsis, positions[:-1]), (Ellipsis, positions[1:]), test.t, pair_sign), axis=-1
        )
        q = alternative_pair_probability(test.t, psi, pair_sign)
        expected = (k - 1) * q
        mean, lo, hi = mean_interval(scores, substream(config.seed, STREAM_BOOTSTRAP, MOMENT_CELL_OFFSET + cell))
        variance = float(np.var(scores, ddof=1))
        slack = 3.0 * variance * math.sqrt(2.0 / (trials - 1))
        checks.append(
            {
                "psi": psi,
                "q": q,
                "mean_ok": lo <= expected <= hi,
                "variance_ok": variance <= 3.0 * mean + slack,
                "above_psi_min": psi >= threshold_psi,
            }
        )
        rows.append(ReportRow(psi, "pair_score_mean", mean, lo, hi, expected, trials))
        rows.append(
            ReportRow(psi, "pair_score_variance", variance, variance - slack, variance + slack, 3.0 * mean, trials)
        )
    details = {"t": test.t, "psi_min": threshold_psi, "null_mean": null_pair_score_mean(test.t, k), "checks": checks}
    return Report(kind="moment_check", rows=rows, config=config.to_json(), details=details)


def prior_sampler(config):
    """Sampler whose intersection tail certifies the configured prior.

    For the hypercube mixture this is the oriented prior inside one block, started at the first
    center; pairs from different blocks never intersect.
    """
    lattice, k = config.lattice, config.path_class.k
    if config.prior == PriorChoices.HYPERCUBE:
        start = int(hypercube_centers(lattice, k)[0])
    else:
        start = config.path_class.start if config.path_class.known_start else 0
    return PriorSampler(PriorChoices.ORIENTED, lattice, k, start=start, seed=config.seed)


def run_eit_fit(config):
    """Measure the intersection tail of the configured prior and fit its envelope."""
    return estimate_eit(prior_sampler(config), config.bounds["eit_trials"])


def run_lower_bound(config, eit=None, risk_report=None):
    """Evaluate the lower bound on the bounds grid through the closed form and by Monte Carlo.

    The EIT fit is taken from ``eit``, else from ``bounds.eta``/``bounds.c0``, else measured.
    Moments stay in ``details``; the ``theory`` column of a Monte Carlo row holds the closed-form
    bound at the same psi. With ``risk_report`` the measured critical bracket is added to the
    details as well.
    """
    eit = eit or _config_eit(config) or run_eit_fit(config)
    sampler = prior_sampler(config)
    blocks = hypercube_blocks(config.lattice, config.path_class.k) if config.prior == PriorChoices.HYPERCUBE else None
    grid = sorted(config.bounds["psi_grid"])
    closed = bound_sweep(grid, eit, blocks=blocks)
    rows = []
    monte_carlo = []
    for psi, report in zip(grid, closed):
        if report.risk_bound is not None:
            bound = report.risk_bound
            rows.append(ReportRow(psi, "closed_form_bound", bound, bound, bound, None, eit.mc_trials))
        estimate = monte_carlo_bound(psi, sampler, config.bounds["moment_trials"], blocks=blocks)
        low, high = estimate.provenance["risk_ci"]
        trials = estimate.provenance["trials"]
        rows.append(ReportRow(psi, "monte_carlo_bound", estimate.risk_bound, low, high, report.risk_bound, trials))
        monte_carlo.append(estimate.to_json())
    details = {
        "eit": eit.to_json(),
        "blocks": blocks or 1,
        "critical_psi": critical_psi(eit),
        "closed_form": [report.to_json() for report in closed],
        "monte_carlo": monte_carlo,
    }
    if risk_report is not None:
        details["critical_bracket"] = critical_bracket(risk_report, closed).to_json()
    return Report(kind="lower_bound", rows=rows, config=config.to_json(), details=details)


def run_critical_bracket(config, eit=None):
    """Run the risk curve and the lower-bound sweep on one config and bracket the critical psi.

    Returns:
        tuple[Report, Report, CriticalBracket]: The risk report, the lower-bound report (whose
        details carry the bracket) and the bracket itself.
    """
    risk_report = run_risk_curve(config)
    bound_report = run_lower_bound(config, eit=eit, risk_report=risk_report)
    bracket = critical_bracket(risk_report, bound_report)
    if not bracket.is_ordered:
        logger.warning("Critical bracket %s is empty or out of order", bracket.to_json())
    return risk_report, bound_report, bracket


def critical_bracket(risk_report, bound_report, success_level=SUCCESS_RISK):
    """Bracket [largest psi with bound >= 1/2, smallest psi with total risk below ``success_level``].

    ``bound_report`` is either a lower-bound Report or a list of LowerBoundReport.
    """
    if isinstance(bound_report, Report):
        bound_points = [(row.psi, row.estimate) for row in bound_report.metric_rows("closed_form_bound")]
    else:
        bound_points = [(item.psi, item.risk_bound) for item in bound_report if item.risk_bound is not None]
    valid = [psi for psi, value in bound_points if value >= HALF]
    winning = [row.psi for row in risk_report.metric_rows("total_risk") if row.estimate < success_level]
    return CriticalBracket(
        bound_psi=max(valid) if valid else None,
        risk_psi=min(winning) if winning else None,
        success_level=success_level,
    )


def _format_float(value):
    return "" if value is None else format(value, ".17g")


def write_csv(report, destination):
    """Write one CSV line per row with the fixed column order."""
    with open(destination, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [
                    _format_float(row.psi),
                    row.metric,
                    _format_float(row.estimate),
                    _format_float(row.ci_lo),
                    _format_float(row.ci_hi),
                    _format_float(row.theory),
                    row.trials,
                ]
            )


def read_risk_csv(source):
    """Read rows written by :func:`write_csv`."""
    rows = []
    with open(source, "r", encoding="utf-8", newline="") as handle:
        for record in csv.DictReader(handle):
            rows.append(
                ReportRow(
                    psi=float(record["psi"]),
                    metric=record["metric"],
                    estimate=float(record["estimate"]),
                    ci_lo=float(record["ci_lo"]),
                    ci_hi=float(record["ci_hi"]),
                    theory=float(record["theory"]) if record["theory"] else None,
                    trials=int(record["trials"]),
                )
            )
    return rows


def read_risk_report(source):
    """Load a risk-curve CSV as a Report, for bracketing against a later lower-bound sweep.

    Raises:
        ValidationError: If the file is not a risk-curve CSV.
    """
    try:
        rows = read_risk_csv(source)
    except (KeyError, ValueError) as err:
        raise ValidationError(f"{source} is not a risk-curve CSV: {err}", key="risk_csv") from err
    report = Report(kind="risk_curve", rows=rows, config={})
    if not report.metric_rows("total_risk"):
        raise ValidationError(f"{source} has no total_risk rows", key="risk_csv")
    return report


def emit(report, formats, output):
    """Write ``report`` as ``<output>.csv``, ``.json`` and ``.svg`` for the requested formats.

    Returns:
        list[pathlib.Path]: Files written.

    Raises:
        OSError: If a destination cannot be written; the message names the path.
    """
    stem = FilePath(output)
    written = []
    for output_format in (OutputFormatChoices(value) for value in formats):
        destination = stem.with_name(f"{stem.name}.{output_format}")
        try:
            destination.parent.mkdir(parents=True, exist_ok=True)
            if output_format == OutputFormatChoices.CSV:
                write_csv(report, destination)
            elif output_format == OutputFormatChoices.JSON:
                with open(destination, "w", encoding="utf-8") as handle:
                    json.dump(report.to_json(), handle, indent=2, sort_keys=True)
                    handle.write("\n")
            else:
                RiskCurveSVG(report).render().saveas(str(destination))
        except OSError as err:
            raise type(err)(f"Cannot write {output_format} report to {destination}: {err}") from err
        logger.info("Wrote %s", destination)
        written.append(destination)
    return written
