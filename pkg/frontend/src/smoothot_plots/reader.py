"""Readers for the experiment output files.

The experiments write flat CSV tables with fixed headers plus a sibling JSON
document carrying the schema version.  The reader validates both before
handing columns to the figure code.
"""

import csv
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1"

TABLE_COLUMNS = {
    "map": ("x", "t_hat"),
    "constraint": ("x", "y", "h_hat", "sos"),
    "convergence": ("n", "seed", "ot_hat", "reference", "abs_error"),
    "gridsearch": ("lambda1", "lambda2", "ot_hat", "duality_gap", "residual_max"),
}


class SchemaError(ValueError):
    pass


def check_sidecar_version(csv_path):
    """Enforce the schema version of the run's JSON sidecar, when present."""
    sidecar = Path(csv_path).with_suffix(".json")
    if not sidecar.exists():
        return None
    try:
        payload = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"unreadable sidecar {sidecar}: {exc}") from None
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"{sidecar} has schema_version {version!r}, expected {SCHEMA_VERSION!r}"
        )
    return payload


def read_table(path, kind):
    """Parse one CSV into named float columns, checking the exact header."""
    if kind not in TABLE_COLUMNS:
        raise SchemaError(f"unknown table kind {kind!r}")
    expected = TABLE_COLUMNS[kind]
    check_sidecar_version(path)
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        if tuple(header) != expected:
            raise SchemaError(
                f"{path} header {header} does not match {list(expected)}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise SchemaError(f"{path} has no data rows")
    data = np.array(rows, dtype=float)
    if data.shape[1] != len(expected):
        raise SchemaError(f"{path} has ragged rows")
    return {name: data[:, i] for i, name in enumerate(expected)}


def band_quantiles(values, probabilities):
    """Quantiles by the inclusive linear-interpolation definition."""
    return np.quantile(np.asarray(values, dtype=float), probabilities, method="linear")
