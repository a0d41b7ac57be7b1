"""
Command-line interface of the Sobolev mapping lab.

    lab distortion --config diag21.json
    lab capacity --config annulus_p2.json --grid 128 --bracket
    lab verify --config ring_qc.json
    lab suite lab/suites/builtin.manifest --jobs 4
    lab config template --command verify -o lab.toml
"""

import datetime
import json
import logging
import os
import sys
from pathlib import Path

import click

from lab import __version__, reports
from lab.config import (COMMANDS, ENV_VAR, ExperimentConfig, find_config_file, generate_config_template, load_config,
                        merge_config_with_cli, validate_config)
from lab.exceptions import ConvergenceError, LabError
from lab.experiment import partial_report, run_experiment
from lab.suite import EXIT_SOLVER, EXIT_USAGE, run_suite

LOG_ENV_VAR = "LAB_LOG"
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def configure_logging():
    """Send the `lab` loggers to stderr at the level named by $LAB_LOG (default: error)."""
    name = os.getenv(LOG_ENV_VAR, "error").lower()
    level = LOG_LEVELS.get(name, logging.ERROR)

    logger = logging.getLogger("lab")
    logger.setLevel(level)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)

    if name not in LOG_LEVELS:
        logger.error("unknown %s=%r, expected one of %s", LOG_ENV_VAR, name, list(LOG_LEVELS))


def fail(message: str, code: int = EXIT_USAGE):
    click.echo(f"Error: {message}", err=True)
    sys.exit(code)


def write_report(report: dict, output: dict, source: Path | None = None) -> None:
    """
    Write the report to output["path"] (stdout when unset) in output["format"].

    The report itself is a function of the config alone; the creation time goes to a `<path>.meta.json` sidecar.
    """
    text = reports.render(report, output.get("format", "json"))
    if not output.get("path"):
        click.echo(text, nl=False)
        return

    path = Path(output["path"])
    reports.write_text(text, path)
    meta = {
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "lab_version": __version__,
        "config": str(source) if source else None,
    }
    reports.write_text(json.dumps(meta, indent=2) + "\n", path.with_name(path.name + ".meta.json"))


def experiment_options(function):
    """Options shared by the distortion, capacity and verify commands."""
    options = [
        click.option("--config", "-c", "config_file", type=click.Path(), default=None,
                     help=f"Experiment config, JSON or TOML (default: lab.json/lab.toml here, then ${ENV_VAR})"),
        click.option("--output", "-o", type=click.Path(), default=None,
                     help="Report file (default: config output.path, else stdout)"),
        click.option("--format", "report_format", type=click.Choice(["json", "csv"], case_sensitive=False),
                     default=None, help="Report format (default: config output.format, else json)"),
        click.option("--grid", type=click.IntRange(min=1), default=None,
                     help="Override the cells per axis of the domain and image domain"),
        click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=None,
                     help="Override the inequality and identity tolerances"),
        click.option("--bracket", is_flag=True, default=False,
                     help="Also solve with plates eroded and dilated by one cell"),
    ]
    for option in reversed(options):
        function = option(function)
    return function


def run_command(command: str, config_file, output, report_format, grid, tol, bracket) -> None:
    try:
        raw, path = load_config(config_file)
    except (LabError, OSError, ImportError) as e:
        fail(str(e))

    overrides = {"output": output, "format": report_format, "grid": grid, "tol": tol, "bracket": bracket}

    try:
        config = ExperimentConfig(merge_config_with_cli(raw, overrides), command, path.stem)
        result = run_experiment(config)
    except ConvergenceError as e:
        click.echo(f"Error: {e}", err=True)
        write_report(partial_report(config, e), config.output, path)
        sys.exit(EXIT_SOLVER)
    except (LabError, OSError) as e:
        fail(str(e))

    # summaries go to stderr when the report itself is written to stdout
    for line in result.lines:
        click.echo(line, err=not config.output["path"])
    write_report(result.report(), config.output, path)
    sys.exit(result.exit_code)


@click.group()
@click.version_option(__version__, prog_name="lab")
def cli():
    """Numerical experiments on Sobolev mappings: distortion, capacity and inequality checks."""
    configure_logging()


@cli.command()
@experiment_options
def distortion(config_file, output, report_format, grid, tol, bracket):
    """Pointwise and global distortion of a mapping and its Ball-class verdict."""
    run_command("distortion", config_file, output, report_format, grid, tol, bracket)


@cli.command()
@experiment_options
def capacity(config_file, output, report_format, grid, tol, bracket):
    """Variational p-capacity of a condenser, and of its image when a map is given."""
    run_command("capacity", config_file, output, report_format, grid, tol, bracket)


@cli.command()
@experiment_options
def verify(config_file, output, report_format, grid, tol, bracket):
    """
    Check the identities and inequalities relating a mapping to its composition operator.

    Exit status: 0 all passed, 1 a check failed, 2 only vacuous passes besides passes.
    """
    run_command("verify", config_file, output, report_format, grid, tol, bracket)


@cli.command()
@click.argument("manifest", type=click.Path())
@click.option("--jobs", "-j", type=click.IntRange(min=1), default=1, help="Experiments run in parallel (default: 1)")
@click.option("--output", "-o", type=click.Path(), default=None, help="Summary file (default: stdout)")
@click.option("--format", "report_format", type=click.Choice(["csv", "json"], case_sensitive=False), default="csv",
              help="Summary format (default: csv)")
@click.option("--grid", type=click.IntRange(min=1), default=None, help="Override the grid of every experiment")
@click.option("--tol", type=click.FloatRange(min=0, min_open=True), default=None,
              help="Override the tolerances of every experiment")
def suite(manifest, jobs, output, report_format, grid, tol):
    """
    Run every experiment listed in MANIFEST and emit one summary row per verdict.

    MANIFEST: text file with one config path per line, relative to the manifest; `#` starts a comment
    """
    try:
        result = run_suite(manifest, jobs, {"grid": grid, "tol": tol})
    except (LabError, OSError) as e:
        fail(str(e))

    text = result.render(report_format)
    if output:
        reports.write_text(text, output)
    else:
        click.echo(text, nl=False)

    counts = ", ".join(f"{count} {status}" for status, count in result.counts().items())
    click.echo(f"{len(result.runs)} experiments: {counts}", err=not output)
    sys.exit(result.exit_code)


@cli.group("config")
def config_group():
    """Configuration management commands."""
    pass


@config_group.command("template")
@click.option("--command", "command", type=click.Choice(list(COMMANDS)), default="verify",
              help="Experiment the template is for (default: verify)")
@click.option("--output", "-o", type=click.Path(), default=None, help="Write the template here instead of stdout")
@click.option("--force", is_flag=True, help="Overwrite an existing file without prompting")
def config_template(command: str, output: str | None, force: bool) -> None:
    """Print or write a commented TOML template for an experiment."""
    content = generate_config_template(command)
    if output is None:
        click.echo(content, nl=False)
        return

    path = Path(output)
    if path.exists() and not force:
        if not click.confirm(f"Configuration file exists at {path}. Overwrite?"):
            click.echo("Aborted.")
            return

    path.write_text(content, encoding="utf-8")
    click.echo(f"Configuration file generated at {path}")


@config_group.command("validate")
@click.option("--config", "-c", "config_file", type=click.Path(), default=None,
              help="Path to configuration file to validate")
def config_validate(config_file: str | None) -> None:
    """Validate a configuration file and build every object it describes, without running it."""
    config_path = find_config_file(config_file)
    if config_path is None:
        fail("Configuration file not found.")

    try:
        raw, _ = load_config(str(config_path))
        command = validate_config(raw)
        ExperimentConfig(raw, command, config_path.stem)
    except (LabError, OSError, ImportError) as e:
        fail(f"Configuration file is invalid: {e}")

    click.echo(f"Configuration file {config_path} is valid ({command}).")


def entry_point():
    cli(prog_name="lab")
