"""Run artifact management: one directory per run, content-addressed by config hash."""

import csv
import io
import json
import logging
from collections.abc import Sequence
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .checkpoint import save_checkpoint
from .checks.base import json_safe
from .config import RunConfig
from .types import CheckReport, Field

logger = logging.getLogger(__name__)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_json(data: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(json_safe(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


class RunLogger:
    """Manages artifacts for a single run.

    Creates `<output_dir>/<command>-<config hash>/` with:
    - metadata.json (config echo and exit code; wall-clock values under `timestamps`)
    - checkpoints/ with binary field snapshots
    - CSV tables and reports/<check>.json
    - SUMMARY.md for check runs

    Timestamps only appear under metadata["timestamps"] and in the
    `Generated:` line of SUMMARY.md, so everything else is byte-stable for a
    fixed config.
    """

    def __init__(self, command: str, config: RunConfig) -> None:
        """Initialize run logger.

        Args:
            command: CLI subcommand (evolve, sweep, check, norms)
            config: Validated run configuration
        """
        self.command = command
        self.config = config
        self.run_id = f"{command}-{config.config_hash()}"
        self.run_dir = Path(config.output_dir) / self.run_id

        self.run_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Run directory: {self.run_dir}")

        self.metadata: dict[str, Any] = {
            "run_id": self.run_id,
            "command": command,
            "config": json.loads(config.canonical_json()),
            "errors": [],
            "timestamps": {"start_time": _utc_now(), "end_time": None, "errors": []},
        }

    def path(self, relative: str) -> Path:
        path = self.run_dir / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_json(self, relative: str, data: Any) -> Path:
        path = self.path(relative)
        path.write_text(dump_json(data))
        logger.debug(f"Saved {path}")
        return path

    def write_csv(self, relative: str, columns: Sequence[str], rows: Sequence[dict[str, Any]]) -> Path:
        """Write rows as CSV with a fixed column order; None becomes an empty cell."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(column)) for column in columns])
        path = self.path(relative)
        path.write_text(buffer.getvalue())
        logger.info(f"Saved table: {path} ({len(rows)} rows)")
        return path

    def log_state(self, index: int, field: Field, t: float) -> Path:
        """Save a snapshot checkpoint."""
        return save_checkpoint(field, t, self.path(f"checkpoints/state_{index:05d}.nlsf"))

    def log_report(self, report: CheckReport, filename: str | None = None) -> Path:
        path = self.write_json(f"reports/{filename or report.name}.json", report.model_dump(mode="json"))
        marker = {"PASS": "✓", "FAIL": "✗", "INCONCLUSIVE": "?"}[report.status]
        logger.info(f"{marker} {report.name}: {report.status}")
        return path

    def log_error(self, error: str) -> None:
        # timestamps["errors"][i] belongs to errors[i]
        self.metadata["errors"].append({"error": error})
        self.metadata["timestamps"]["errors"].append(_utc_now())
        logger.error(error)

    def finalize(self, exit_code: int, reports: Sequence[CheckReport] | None = None) -> Path:
        """Finalize run and save metadata.

        Args:
            exit_code: Process exit code of the run
            reports: Check reports to tabulate in SUMMARY.md

        Returns:
            Path to metadata file
        """
        self.metadata["timestamps"]["end_time"] = _utc_now()
        self.metadata["exit_code"] = exit_code
        metadata_path = self.run_dir / "metadata.json"
        metadata_path.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")

        if reports:
            report_path = self._generate_markdown_summary(reports)
            logger.info(f"Generated summary: {report_path}")

        logger.info(f"Finalized run: {metadata_path}")
        return metadata_path

    def _generate_markdown_summary(self, reports: Sequence[CheckReport]) -> Path:
        summary_path = self.run_dir / "SUMMARY.md"
        with open(summary_path, "w") as f:
            f.write("# Check Summary\n\n")
            f.write(f"Generated: {self.metadata['timestamps']['end_time']}\n\n")
            f.write(f"**Run ID:** `{self.run_id}`\n\n")
            f.write("| Check | Status | Hard | Ratio | Slope |\n")
            f.write("|---|---|---|---|---|\n")
            for report in reports:
                marker = {"PASS": "✓", "FAIL": "✗", "INCONCLUSIVE": "?"}[report.status]
                f.write(
                    f"| {report.name} | {marker} {report.status} | {'yes' if report.hard else 'no'} "
                    f"| {_format_cell(report.ratio)} | {_format_cell(report.slope)} |\n"
                )
            notes = [(report.name, note) for report in reports for note in report.notes]
            if notes:
                f.write("\n## Notes\n\n")
                f.writelines(f"- **{name}:** {note}\n" for name, note in notes)
        return summary_path
