"""Readers for the run-artifact file formats flowfig consumes.

These are standalone implementations of the producer's documented formats
(round-metrics CSV, spectra CSV, and the FLOWMAT1 binary matrix container),
so the renderer works on artifact files alone and needs nothing from the
training package.

FLOWMAT1 layout: 8-byte magic ``FLOWMAT1``, then rows and cols as little-
endian uint64, then rows*cols little-endian float64 in row-major order.
"""

import csv
import struct
from pathlib import Path

import numpy as np

MAGIC = b"FLOWMAT1"


class ArtifactError(Exception):
    """Input file is missing, empty, or lacks a required column."""


def _open_checked(path):
    path = Path(path)
    if not path.is_file():
        raise ArtifactError(f"{path}: no such file")
    return path


def read_matrix(path):
    """Load a matrix from .flowmat1 or a plain numeric CSV."""
    path = _open_checked(path)
    if path.suffix == ".flowmat1":
        blob = path.read_bytes()
        if blob[:8] != MAGIC:
            raise ArtifactError(f"{path}: bad magic, not a FLOWMAT1 file")
        rows, cols = struct.unpack_from("<QQ", blob, 8)
        expected = 24 + rows * cols * 8
        if len(blob) != expected:
            raise ArtifactError(
                f"{path}: truncated payload ({len(blob)} bytes, expected {expected})"
            )
        data = np.frombuffer(blob, dtype="<f8", offset=24)
        return data.reshape(rows, cols).astype(np.float64)
    try:
        values = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise ArtifactError(f"{path}: not a numeric CSV matrix ({exc})") from exc
    if values.size == 0:
        raise ArtifactError(f"{path}: empty file")
    return values


def read_table(path, required):
    """Read a header CSV into named float columns; all rows must be full."""
    path = _open_checked(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ArtifactError(f"{path}: empty file") from None
        for name in required:
            if name not in header:
                raise ArtifactError(f"{path}: missing required column {name!r}")
        rows = [row for row in reader if row]
    if not rows:
        raise ArtifactError(f"{path}: no data rows")
    columns = {}
    for j, name in enumerate(header):
        try:
            columns[name] = np.array([float(row[j]) for row in rows])
        except (ValueError, IndexError) as exc:
            raise ArtifactError(f"{path}: bad value in column {name!r} ({exc})") from exc
    return columns


ROUND_COLUMNS = ("round", "f", "R", "Rc")


def read_rounds(path):
    """Round-metrics CSV -> columns; needs round, f, R, Rc."""
    return read_table(path, ROUND_COLUMNS)


def read_spectra(path):
    """Spectra CSV -> {class label: descending singular values}."""
    columns = read_table(path, ("class", "index", "singular_value"))
    spectra = {}
    for label in np.unique(columns["class"]):
        mask = columns["class"] == label
        order = np.argsort(columns["index"][mask])
        spectra[int(label)] = columns["singular_value"][mask][order]
    return spectra
