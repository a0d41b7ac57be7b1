"""
Batch runs: execute every experiment listed in a manifest and aggregate the verdicts into one summary table.
"""

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from lab import reports
from lab.config import ExperimentConfig
from lab.exceptions import ConvergenceError, LabError, ValidationError
from lab.experiment import run_experiment

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("config", "name", "status", "kind", "lhs", "rhs", "slack", "tolerance_used", "exit_code", "message")

EXIT_USAGE = 64
EXIT_SOLVER = 65

# Most severe first
EXIT_PRECEDENCE = (EXIT_USAGE, EXIT_SOLVER, 1, 2, 0)


def read_manifest(manifest) -> list[Path]:
    """
    Config paths listed in a manifest, one per line. Blank lines and `#` comments are skipped and relative paths are
    resolved against the manifest's directory.
    """
    manifest = Path(manifest)
    paths = []
    for line in manifest.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            path = Path(line)
            paths.append(path if path.is_absolute() else manifest.parent / path)

    if not paths:
        raise ValidationError(f"no experiments in {manifest}", "manifest")
    return paths


def _row(config, exit_code, message="", **verdict):
    row = dict.fromkeys(SUMMARY_COLUMNS, "")
    row.update(verdict, config=config, exit_code=exit_code, message=message)
    return row


def run_one(path, overrides=None) -> dict:
    """
    Run one experiment of a suite. Every failure is turned into rows, so a worker process never raises.

    :return: {"config": name, "exit_code": code, "rows": [...]}
    """
    path = Path(path)
    name = path.stem

    if not path.exists():
        return {"config": name, "exit_code": EXIT_USAGE,
                "rows": [_row(name, EXIT_USAGE, f"config file not found: {path}", status="missing")]}

    try:
        config = ExperimentConfig.from_file(path, overrides=overrides)
        name = config.name
        result = run_experiment(config)
    except ConvergenceError as e:
        return {"config": name, "exit_code": EXIT_SOLVER, "rows": [_row(name, EXIT_SOLVER, str(e), status="error")]}
    except (LabError, OSError) as e:
        return {"config": name, "exit_code": EXIT_USAGE, "rows": [_row(name, EXIT_USAGE, str(e), status="error")]}

    if result.verdicts:
        verdicts = [verdict.to_dict() for verdict in result.verdicts]
        rows = [_row(name, result.exit_code, **{column: verdict[column] for column in reports.VERDICT_COLUMNS})
                for verdict in verdicts]
    else:
        rows = [_row(name, result.exit_code, "; ".join(result.lines), name=config.command, status="done")]

    return {"config": name, "exit_code": result.exit_code, "rows": rows}


def suite_exit_code(codes) -> int:
    codes = set(codes)
    for code in EXIT_PRECEDENCE:
        if code in codes:
            return code
    return 0


class SuiteResult:
    __slots__ = "runs", "exit_code"

    def __init__(self, runs):
        self.runs = sorted(runs, key=lambda run: run["config"])
        self.exit_code = suite_exit_code(run["exit_code"] for run in self.runs)

    def __repr__(self):
        return f"SuiteResult({len(self.runs)} experiments, exit {self.exit_code})"

    @property
    def rows(self):
        return [row for run in self.runs for row in run["rows"]]

    def counts(self):
        statuses = [row["status"] for row in self.rows]
        return {status: statuses.count(status) for status in sorted(set(statuses))}

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows)
        return buffer.getvalue()

    def to_report(self) -> dict:
        return {"experiments": len(self.runs), "exit_code": self.exit_code, "counts": self.counts(),
                "rows": self.rows}

    def render(self, format="csv") -> str:
        return self.to_csv() if format == "csv" else reports.to_json(self.to_report())


def run_suite(manifest, jobs: int = 1, overrides: dict | None = None) -> SuiteResult:
    """
    Run every experiment of a manifest, up to `jobs` at a time. Rows are sorted by config name, so the summary does
    not depend on completion order.
    """
    paths = read_manifest(manifest)
    logger.info("suite %s: %d experiments, %d jobs", manifest, len(paths), jobs)

    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            runs = list(executor.map(run_one, paths, [overrides] * len(paths)))
    else:
        runs = [run_one(path, overrides) for path in paths]

    return SuiteResult(runs)
