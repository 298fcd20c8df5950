"""Command-line entry point: ``correlated-paths <command>``."""

import functools
import json
import logging
import sys

import click

from correlated_paths import __version__
from correlated_paths.choices import SignChoices
from correlated_paths.config import ExperimentConfig
from correlated_paths.detect import TestConfig, calibrate, glrt_scan, psi_min, scan, scan_log_cardinality
from correlated_paths.exceptions import BudgetExceededError, DomainError, FitError, ValidationError
from correlated_paths.graph import parse_path
from correlated_paths.harness import (
    emit,
    read_risk_report,
    run_critical_bracket,
    run_eit_fit,
    run_lower_bound,
    run_moment_check,
    run_risk_curve,
)
from correlated_paths.model import CorrelationModel, Sample, simulate_alternative, simulate_null
from correlated_paths.paths import EITFit
from correlated_paths.utils.general import parse_class_spec, parse_float_list

logger = logging.getLogger(__name__)

EXIT_INVALID = 2
EXIT_BUDGET = 3
LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _configure_logging(verbose):
    level = LOG_LEVELS[min(verbose, len(LOG_LEVELS) - 1)]
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def _handle_errors(command):
    """Translate package errors into messages and exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except BudgetExceededError as err:
            click.echo(f"Error: {err}", err=True)
            sys.exit(EXIT_BUDGET)
        except (ValidationError, DomainError, FitError) as err:
            click.echo(f"Error: {err}", err=True)
            sys.exit(EXIT_INVALID)

    return wrapper


def _config_options(command):
    """Options shared by every command that reads an experiment config."""
    options = [
        click.option(
            "--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="TOML or JSON config."
        ),
        click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a dotted config key."),
        click.option("--seed", type=int, default=None, help="Master seed."),
        click.option("--threads", type=int, default=None, help="Worker processes."),
        click.option("--out", "output", default=None, help="Output file stem."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _load(
    config_path, overrides, seed=None, threads=None, output=None, class_spec=None, psi_grid=None, grid_section="risk"
):
    overrides = list(overrides)
    if psi_grid:
        overrides.append(f"{grid_section}.psi_grid={json.dumps(parse_float_list(psi_grid))}")
    if class_spec:
        for key, value in parse_class_spec(class_spec).items():
            overrides.append(f"path_class.{key}={json.dumps(value)}")
    return ExperimentConfig.load(config_path, overrides=overrides, seed=seed, threads=threads, output=output)


def _echo_json(data):
    click.echo(json.dumps(data, indent=2, sort_keys=True))


@click.group()
@click.version_option(__version__, prog_name="correlated-paths")
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose):
    """Detect a path of correlated Gaussian observations on a torus lattice."""
    _configure_logging(verbose)


@main.command()
@_config_options
@click.option("--psi", type=float, default=None, help="Plant a correlated path with this psi.")
@click.option("--path", "path_text", default=None, help="Planted path as comma-separated node indices.")
@_handle_errors
def simulate(config_path, overrides, seed, threads, output, psi, path_text):
    """Draw one sample under the null, or under a planted path with --psi and --path."""
    config = _load(config_path, overrides, seed, threads, output)
    if psi is None:
        sample = simulate_null(config.lattice, config.seed)
    else:
        if path_text is None:
            raise ValidationError("--psi needs --path", key="path")
        sample = simulate_alternative(config.lattice, parse_path(path_text), CorrelationModel(psi), config.seed)
    destination = f"{config.output}.f64"
    sample.save(destination)
    _echo_json({"sample": destination, "provenance": sample.provenance, "seed": sample.seed})


@main.command("calibrate")
@_config_options
@click.option("--log-card", type=float, default=None, help="log|C|; computed from the path class when omitted.")
@_handle_errors
def calibrate_command(config_path, overrides, seed, threads, output, log_card):
    """Print the calibrated threshold t and psi_min(t)."""
    config = _load(config_path, overrides, seed, threads, output)
    path_class = config.path_class
    if log_card is None:
        log_card = scan_log_cardinality(path_class, config.sign, budget=config.budget)
    t = calibrate(path_class.k, log_card)
    _echo_json({"k": path_class.k, "log_card": log_card, "t": t, "psi_min": psi_min(t)})


@main.command("scan")
@_config_options
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False), help="Sample file.")
@click.option("--class", "class_spec", default=None, help="Path class, e.g. 'k=4;start=unknown;oriented=true'.")
@click.option("--t", "threshold", default="auto", help="Threshold, or 'auto' to calibrate.")
@click.option("--sign", type=click.Choice(SignChoices.values()), default=None, help="Pair comparison.")
@click.option("--engine", default=None, help="exhaustive, dp or beam:<width>.")
@click.option("--glrt-psi", type=float, default=None, help="Also report the GLRT statistic at this psi.")
@_handle_errors
def scan_command(
    config_path, overrides, seed, threads, output, input_path, class_spec, threshold, sign, engine, glrt_psi
):
    """Scan a saved sample and print the detection outcome."""
    overrides = list(overrides)
    if sign:
        overrides.append(f"test.sign={json.dumps(sign)}")
    if engine:
        overrides.append(f"test.engine={json.dumps(engine)}")
    config = _load(config_path, overrides, seed, threads, output, class_spec=class_spec)
    sample = Sample.load(input_path)
    if (sample.lattice.d, sample.lattice.m) != (config.lattice.d, config.lattice.m):
        raise ValidationError(f"Sample lattice {sample.lattice} does not match the configured {config.lattice}")
    path_class = config.path_class
    if threshold == "auto":
        t = TestConfig.calibrated(path_class, sign=config.sign, budget=config.budget).t
    else:
        try:
            t = float(threshold)
        except ValueError as err:
            raise ValidationError(f"--t must be a number or 'auto', got {threshold!r}", key="t") from err
    outcome = scan(sample, path_class, t, config.sign, config.engine)
    result = outcome.to_json()
    if glrt_psi is not None:
        result["glrt"] = glrt_scan(sample, path_class, CorrelationModel(glrt_psi), budget=config.budget).to_json()
    _echo_json(result)


@main.command("risk-curve")
@_config_options
@click.option("--psi-grid", default=None, help="Comma-separated psi values replacing risk.psi_grid.")
@_handle_errors
def risk_curve(config_path, overrides, seed, threads, output, psi_grid):
    """Estimate the risk of the scan test over the risk psi grid."""
    config = _load(config_path, overrides, seed, threads, output, psi_grid=psi_grid)
    report = run_risk_curve(config)
    for destination in emit(report, config.formats, config.output):
        click.echo(str(destination))


@main.command("lower-bound")
@_config_options
@click.option("--eit", "eit_path", default=None, type=click.Path(exists=True, dir_okay=False), help="EIT fit JSON.")
@click.option("--psi-grid", default=None, help="Comma-separated psi values replacing bounds.psi_grid.")
@click.option(
    "--risk-csv",
    "risk_path",
    default=None,
    type=click.Path(exists=True, dir_okay=False),
    help="risk-curve CSV of the same instance; adds the critical bracket to the details.",
)
@_handle_errors
def lower_bound(config_path, overrides, seed, threads, output, eit_path, psi_grid, risk_path):
    """Evaluate the risk lower bound over the bounds psi grid."""
    config = _load(config_path, overrides, seed, threads, output, psi_grid=psi_grid, grid_section="bounds")
    eit = EITFit.read(eit_path) if eit_path else None
    risk_report = read_risk_report(risk_path) if risk_path else None
    report = run_lower_bound(config, eit=eit, risk_report=risk_report)
    for destination in emit(report, config.formats, config.output):
        click.echo(str(destination))


@main.command("critical-bracket")
@_config_options
@click.option("--eit", "eit_path", default=None, type=click.Path(exists=True, dir_okay=False), help="EIT fit JSON.")
@_handle_errors
def critical_bracket_command(config_path, overrides, seed, threads, output, eit_path):
    """Run the risk curve and the lower-bound sweep, then print the measured critical psi bracket."""
    config = _load(config_path, overrides, seed, threads, output)
    eit = EITFit.read(eit_path) if eit_path else None
    risk_report, bound_report, bracket = run_critical_bracket(config, eit=eit)
    written = emit(risk_report, config.formats, f"{config.output}.risk")
    written += emit(bound_report, config.formats, f"{config.output}.bound")
    _echo_json(dict(bracket.to_json(), files=[str(path) for path in written]))


@main.command("eit-fit")
@_config_options
@_handle_errors
def eit_fit(config_path, overrides, seed, threads, output):
    """Measure the intersection tail of the configured prior and write the fit as JSON."""
    config = _load(config_path, overrides, seed, threads, output)
    fit = run_eit_fit(config)
    destination = f"{config.output}.eit.json"
    fit.write(destination)
    _echo_json(dict(fit.to_json(), file=destination))


@main.command("moment-check")
@_config_options
@_handle_errors
def moment_check(config_path, overrides, seed, threads, output):
    """Compare the planted-path pair count with its theoretical mean and variance bound."""
    config = _load(config_path, overrides, seed, threads, output)
    report = run_moment_check(config)
    for destination in emit(report, config.formats, config.output):
        click.echo(str(destination))
