"""Result rows and their CSV/JSON emission."""

import csv
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

logger = logging.getLogger(__name__)

CSV_HEADER = ("experiment", "param", "method", "metric", "stderr", "n_realizations", "seed")


@dataclass(frozen=True)
class ResultRow:
    """One point of a sweep: a metric for a method at a parameter value."""

    experiment: str
    param: float
    method: str
    metric: float
    stderr: float
    n_realizations: int
    seed: int
    failures: int = 0

    def __post_init__(self) -> None:
        if not self.stderr >= 0:
            raise ValueError(f"stderr must be nonnegative, got {self.stderr}")
        if self.n_realizations < 0 or self.failures < 0:
            raise ValueError("realization and failure counts must be nonnegative")

    @property
    def sort_key(self) -> tuple[float, str]:
        return (self.param, self.method)


def sort_rows(rows: list[ResultRow]) -> list[ResultRow]:
    return sorted(rows, key=lambda row: row.sort_key)


def format_number(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(value, ".17g")


def csv_fields(row: ResultRow) -> list[str]:
    return [
        row.experiment,
        format_number(row.param),
        row.method,
        format_number(row.metric),
        format_number(row.stderr),
        str(row.n_realizations),
        str(row.seed),
    ]


def json_mirror_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def emit_results(
    rows: list[ResultRow],
    path: str | Path,
    json_mirror: bool = False,
    config: dict[str, Any] | None = None,
) -> Path:
    """Write rows sorted by (param, method) as CSV, optionally with a JSON mirror.

    Returns the CSV path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sort_rows(rows)

    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in ordered:
            writer.writerow(csv_fields(row))
    logger.info(f"Wrote {len(ordered)} rows to {path}")

    if json_mirror:
        mirror = json_mirror_path(path)
        payload = {"config": config, "rows": [asdict(row) for row in ordered]}
        with open(mirror, "w") as f:
            json.dump(payload, f, indent=2)
        logger.info(f"Wrote JSON mirror to {mirror}")

    return path
