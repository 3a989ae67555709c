"""Matrix persistence: the FLOWMAT1 binary container and a plain CSV writer.

FLOWMAT1 layout (little-endian throughout):

    bytes 0..7    ASCII magic "FLOWMAT1"
    bytes 8..15   rows, unsigned 64-bit
    bytes 16..23  cols, unsigned 64-bit
    bytes 24..    rows*cols IEEE-754 float64 values, row-major

The CSV writer emits one matrix row per line, comma separated, '.' decimal
separator, 17 significant digits (enough to round-trip float64 exactly).
"""

import struct

import numpy as np

MAGIC = b"FLOWMAT1"
_HEADER = struct.Struct("<8sQQ")


def save_matrix(path, a):
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, a.shape[0], a.shape[1]))
        fh.write(a.astype("<f8").tobytes())


def load_matrix(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, rows, cols = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a FLOWMAT1 file")
        payload = fh.read()
    expected = rows * cols * 8
    if len(payload) != expected:
        raise ValueError(
            f"{path}: expected {expected} payload bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return data.reshape(rows, cols)


def write_matrix_csv(path, a):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    with open(path, "w", encoding="ascii") as fh:
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")
