"""CSV ingestion and atomic report writing."""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError, ValidationError

__all__ = [
    "load_labeled_csv",
    "load_unlabeled_csv",
    "write_text_atomic",
    "write_json_atomic",
]


def _parse_cell(token: str, line_num: int, column: str) -> float:
    text = token.strip()
    if not text:
        raise ValidationError(f"empty value at line {line_num}, column {column!r}")
    try:
        value = float(text)
    except ValueError as exc:
        raise ValidationError(
            f"cannot parse {token!r} at line {line_num}, column {column!r}"
        ) from exc
    if math.isnan(value) or math.isinf(value):
        raise ValidationError(
            f"non-finite value {token!r} at line {line_num}, column {column!r}"
        )
    return value


def _read_matrix(path: str | Path, min_columns: int) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        header = [name.strip() for name in header]
        if len(header) < min_columns or any(not name for name in header):
            raise DataError(
                f"{path}: header must name at least {min_columns} non-empty column(s)"
            )
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {reader.line_num} has {len(row)} fields, "
                    f"expected {len(header)}"
                )
            rows.append(
                [
                    _parse_cell(cell, reader.line_num, header[j])
                    for j, cell in enumerate(row)
                ]
            )
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def load_labeled_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Read a labeled CSV: column 1 is the outcome, the rest are features.

    Returns (outcomes, features, feature_names).
    """
    header, matrix = _read_matrix(path, min_columns=2)
    return matrix[:, 0], matrix[:, 1:], header[1:]


def load_unlabeled_csv(
    path: str | Path, expected_names: list[str] | None = None
) -> tuple[np.ndarray, list[str]]:
    """Read a features-only CSV, optionally checking the header names/order."""
    header, matrix = _read_matrix(path, min_columns=1)
    if expected_names is not None and header != list(expected_names):
        raise DataError(
            f"{path}: feature columns {header} do not match the labeled file's "
            f"feature columns {list(expected_names)}"
        )
    return matrix, header


def write_text_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file and rename, so partial files are never left behind."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def write_json_atomic(path: str | Path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    write_text_atomic(path, text + "\n")
