"""Input schema validation for the documented heavyspin output files.

plotkit is a read-only consumer: every figure traces columns of a documented
CSV (docs/formats.md in the producer repo, schema version 1) or prediction
fields of the results.json sidecar.  Nothing is recomputed here; a file whose
header does not match the documented column set is refused with the expected
and actual schemas in the message.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

SCHEMA_VERSION = 1

# documented v1 column sets, keyed by figure kind
COLUMNS = {
    "thresholds": ["p", "h_min", "h_star", "lambda_above", "f_above", "t_above"],
    "fp-curves": ["p", "H_over_hstar", "f", "lam"],
    "series-profile": ["ell", "log_term"],
    "overlap": ["pair_sample", "overlap", "restricted_overlap"],
    "occupancy": ["pattern", "frequency", "product_sign"],
    "ultrametric": ["margin", "violation_frequency"],
    "frechet-qq": ["trial", "max_rescaled"],
    "gse": ["trial", "p_dom", "gse_analytic", "gse_numeric", "rel_gap",
            "support_magnitude_err", "restart"],
}

KINDS = tuple(COLUMNS)


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


def read_table(path: str | Path, kind: str) -> dict[str, list[str]]:
    """Read a CSV and verify its header against the kind's documented columns."""
    expected = COLUMNS[kind]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file; expected columns {expected}")
        if header != expected:
            raise SchemaError(
                f"{path}: column mismatch for kind {kind!r}; "
                f"expected {expected}, got {header}")
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    cols = {name: [row[i] for row in rows] for i, name in enumerate(expected)}
    return cols


def floats(col: list[str]) -> list[float]:
    return [float(x) if x != "" else float("nan") for x in col]


def read_sidecar(path: str | Path) -> dict:
    """Read a results.json sidecar and verify its schema version."""
    with open(path) as fh:
        record = json.load(fh)
    version = record.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: schema_version mismatch; expected {SCHEMA_VERSION}, "
            f"got {version}")
    return record
