import csv
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from functional import seq

from app import settings
from app.services.utils import dumps, format_significant

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
TIMESERIES_FILE = "timeseries.csv"
SUMMARY_FILE = "summary.json"


class RunResultsWriter:
    """Files of one scenario run: manifest, time series and summary under a single directory."""

    def __init__(self, run_dir: Union[str, Path], **kwargs):
        self.run_dir = Path(run_dir)
        self.digits = kwargs.get("digits", settings.CSV_SIGNIFICANT_DIGITS)

    def _prepare(self):
        self.run_dir.mkdir(parents=True, exist_ok=True)

    def _write_json(self, name: str, data: Any) -> Path:
        self._prepare()
        path = self.run_dir / name
        path.write_text(dumps(data, indent=2, sort_keys=True) + "\n")
        logger.debug(f"Wrote {path}")
        return path

    def write_manifest(self, manifest: Dict[str, Any]) -> Path:
        return self._write_json(MANIFEST_FILE, manifest)

    def write_summary(self, summary: Dict[str, Any]) -> Path:
        return self._write_json(SUMMARY_FILE, summary)

    def write_timeseries(self, rows: Sequence[Dict[str, Any]], name: str = TIMESERIES_FILE) -> Path:
        """Rows share their keys; the first row fixes the column order."""
        self._prepare()
        path = self.run_dir / name
        columns: List[str] = list(rows[0].keys()) if rows else []
        lines = (
            seq(rows)
            .map(lambda row: [format_significant(row[column], self.digits) for column in columns])
            .to_list()
        )
        with path.open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            writer.writerows(lines)
        logger.info(f"Wrote {len(lines)} rows to {path}")
        return path

    def __str__(self):
        return f"RunResultsWriter(run_dir={self.run_dir})"

    def __repr__(self):
        return self.__str__()
