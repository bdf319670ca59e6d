"""
Result rows and their CSV form.

Numbers are written with 12 significant digits through Python's own float
formatting, so the output does not depend on the locale.
"""

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, List

HEADER = ("experiment", "label", "snr_db", "rate", "error_rate", "halfwidth", "seed")


class SchemaError(ValueError):
    """A result file does not have the expected columns."""


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    label: str
    snr_db: float
    rate: float
    error_rate: float
    halfwidth: float
    seed: int

    def __post_init__(self):
        for name in ("snr_db", "rate", "error_rate", "halfwidth"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r} ({self.experiment}/{self.label})")

    @property
    def key(self):
        return self.experiment, self.label, format_number(self.snr_db), self.seed

    def to_record(self) -> List[str]:
        return [
            self.experiment,
            self.label,
            format_number(self.snr_db),
            format_number(self.rate),
            format_number(self.error_rate),
            format_number(self.halfwidth),
            str(self.seed),
        ]


def format_number(value: float) -> str:
    text = f"{float(value):.12g}"
    return "0" if text == "-0" else text


def write_rows(path: str, rows: Iterable[ResultRow]) -> int:
    """Write rows with a header; returns the number of rows written."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HEADER)
        for row in rows:
            writer.writerow(row.to_record())
            count += 1
    return count


def read_rows(path: str) -> List[ResultRow]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(header) != HEADER:
            raise SchemaError(f"{path}: expected header {','.join(HEADER)}, got {header}")
        rows = []
        for number, record in enumerate(reader, start=2):
            if len(record) != len(HEADER):
                raise SchemaError(f"{path}:{number}: expected {len(HEADER)} columns, got {len(record)}")
            try:
                rows.append(
                    ResultRow(
                        experiment=record[0],
                        label=record[1],
                        snr_db=float(record[2]),
                        rate=float(record[3]),
                        error_rate=float(record[4]),
                        halfwidth=float(record[5]),
                        seed=int(record[6]),
                    )
                )
            except ValueError as e:
                raise SchemaError(f"{path}:{number}: {e}")
    return rows


__all__ = ["HEADER", "SchemaError", "ResultRow", "format_number", "write_rows", "read_rows"]
