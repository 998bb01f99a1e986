"""Sampled 1D/2D outputs and their CSV form.

CSV dialect: comma separated, '.' decimal, metadata as ``# key=value`` lines
before the data. Numbers are written with ``repr``-exact precision so that a
write/read cycle is lossless and repeated runs are byte-identical.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if x == 0:
        return "0"
    return repr(x)


def _meta_lines(metadata):
    lines = []
    for key in metadata:
        value = metadata[key]
        if isinstance(value, (list, tuple, np.ndarray)):
            value = " ".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v) for v in value)
        elif isinstance(value, (float, np.floating)):
            value = _fmt(value)
        text = str(value).replace("\n", " ")
        lines.append(f"# {key}={text}\n")
    return lines


def _parse_meta(lines):
    meta = {}
    for line in lines:
        body = line.lstrip("#").strip()
        if "=" in body:
            key, _, value = body.partition("=")
            meta[key.strip()] = value.strip()
    return meta


@dataclass(eq=False)
class Spectrum:
    """A 1D sampled spectrum; ``unit`` tags the axis (GHz, mT, nm, ...)."""

    axis: np.ndarray
    values: np.ndarray
    unit: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.axis.shape != self.values.shape or self.axis.ndim != 1:
            raise DomainError("axis and values must be 1D arrays of equal length")
        if self.axis.size > 1 and np.any(np.diff(self.axis) <= 0):
            raise DomainError("spectrum axis must be strictly increasing")

    def to_csv(self, path) -> Path:
        meta = {"axis_unit": self.unit, **self.metadata}
        return _write_columns(path, meta, [self.axis, self.values])


@dataclass(eq=False)
class Trace:
    """Time- or sweep-ordered signal. ``time`` is in seconds unless ``axis_name`` says otherwise."""

    time: np.ndarray
    signal: np.ndarray
    metadata: dict = field(default_factory=dict)
    axis_name: str = "time_s"

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.time.ndim != 1 or self.signal.shape[0] != self.time.shape[0]:
            raise DomainError("time and signal must have the same length")
        if self.time.size > 1 and np.any(np.diff(self.time) <= 0):
            raise DomainError("trace time axis must be strictly increasing")

    def to_csv(self, path) -> Path:
        meta = {"columns": self.axis_name + ",signal", **self.metadata}
        cols = [self.time]
        if self.signal.ndim == 1:
            cols.append(self.signal)
        else:
            cols.extend(self.signal.T)
        return _write_columns(path, meta, cols)


def _write_columns(path, metadata, columns) -> Path:
    path = Path(path)
    lines = _meta_lines(metadata)
    for row in zip(*columns):
        lines.append(",".join(_fmt(v) for v in row) + "\n")
    path.write_text("".join(lines), encoding="utf-8")
    return path


def read_csv(path):
    """Return ``(metadata, columns)`` for a file written by this module."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    meta = _parse_meta(l for l in text if l.startswith("#"))
    rows = [l for l in text if l.strip() and not l.startswith("#")]
    if not rows:
        return meta, np.empty((0, 0))
    data = np.array([[float(v) for v in r.split(",")] for r in rows])
    return meta, data


def write_matrix_csv(path, row_axis, col_axis, matrix, metadata) -> Path:
    """Matrix CSV: the first row holds ``col_axis`` and the first column ``row_axis``."""
    path = Path(path)
    lines = _meta_lines(metadata)
    lines.append(",".join(["nan"] + [_fmt(v) for v in col_axis]) + "\n")
    for r, row in zip(row_axis, matrix):
        lines.append(",".join([_fmt(r)] + [_fmt(v) for v in row]) + "\n")
    path.write_text("".join(lines), encoding="utf-8")
    return path


def read_matrix_csv(path):
    meta, data = read_csv(path)
    return meta, data[1:, 0], data[0, 1:], data[1:, 1:]
