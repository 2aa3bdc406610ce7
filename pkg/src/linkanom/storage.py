"""Bit-stable file formats: headerless matrix CSVs, 0/1 label columns,
scenario directories, and flat key=value config files.

Floats are written with 17 significant digits, which round-trips every
finite double exactly.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Mapping

import numpy as np

from .traffic import Scenario

__all__ = [
    "format_float",
    "atomic_write_text",
    "read_matrix_csv",
    "write_matrix_csv",
    "read_labels_csv",
    "write_labels_csv",
    "write_scenario",
    "read_scenario",
    "read_config_file",
    "write_config_file",
]

SCENARIO_FILES = ("Y.csv", "R.csv", "X.csv", "A.csv", "V.csv", "labels.csv")


def format_float(x: float) -> str:
    return format(x, ".17g")


def atomic_write_text(path: Path, text: str) -> None:
    """No output file is ever half-written: write to a sibling temp file,
    then rename into place."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_matrix_csv(matrix: np.ndarray, path: str | Path) -> None:
    """Headerless comma-separated matrix, one row per line."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got ndim={matrix.ndim}")
    lines = (",".join(format_float(x) for x in row) for row in matrix)
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_matrix_csv(path: str | Path) -> np.ndarray:
    """Parse a headerless numeric CSV; errors name the offending line."""
    path = Path(path)
    rows: list[list[float]] = []
    width: int | None = None
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise ValueError(
                    f"{path}: line {lineno} has {len(fields)} fields, expected {width}"
                )
            try:
                values = [float(field) for field in fields]
            except ValueError:
                raise ValueError(f"{path}: line {lineno} contains a non-numeric field") from None
            if not all(np.isfinite(values)):
                raise ValueError(f"{path}: line {lineno} contains a non-finite value")
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: empty matrix file")
    return np.array(rows, dtype=float)


def write_labels_csv(labels: np.ndarray, path: str | Path) -> None:
    """Single column of 0/1, one snapshot per line."""
    labels = np.asarray(labels, dtype=bool)
    atomic_write_text(Path(path), "\n".join("1" if flag else "0" for flag in labels) + "\n")


def read_labels_csv(path: str | Path) -> np.ndarray:
    path = Path(path)
    labels = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            if line not in ("0", "1"):
                raise ValueError(f"{path}: line {lineno} must be 0 or 1, got {line!r}")
            labels.append(line == "1")
    if not labels:
        raise ValueError(f"{path}: empty labels file")
    return np.array(labels, dtype=bool)


def write_config_file(entries: Mapping[str, object], path: str | Path) -> None:
    """Flat `key = value` lines in the given order."""
    lines = [f"{key} = {value}" for key, value in entries.items()]
    atomic_write_text(Path(path), "\n".join(lines) + "\n")


def read_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    entries: dict[str, str] = {}
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno} is not a key = value pair")
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


def write_scenario(scenario: Scenario, directory: str | Path) -> list[Path]:
    """Write one CSV per scenario matrix plus the label column; returns the
    created paths (config echoing is the CLI's job)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, matrix in (
        ("Y.csv", scenario.y),
        ("R.csv", scenario.routing),
        ("X.csv", scenario.x),
        ("A.csv", scenario.a),
        ("V.csv", scenario.v),
    ):
        path = directory / name
        write_matrix_csv(matrix, path)
        written.append(path)
    labels_path = directory / "labels.csv"
    write_labels_csv(scenario.labels, labels_path)
    written.append(labels_path)
    return written


def read_scenario(directory: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read back the traffic matrix and labels of a scenario directory."""
    directory = Path(directory)
    y = read_matrix_csv(directory / "Y.csv")
    labels = read_labels_csv(directory / "labels.csv")
    if labels.shape[0] != y.shape[1]:
        raise ValueError(
            f"{directory}: {labels.shape[0]} labels do not match {y.shape[1]} snapshots"
        )
    return y, labels
