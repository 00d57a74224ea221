"""Matrix file formats accepted by the harness.

Two formats, chosen by content: comma-separated text (one row per line,
optional single header line) and a raw binary layout -- a 16-byte header
(8-byte magic, uint32 rows, uint32 cols, little-endian) followed by
row-major float64 data.  The binary format round-trips doubles exactly.
"""

import struct

import numpy as np

MAGIC = b"DISLABMX"
_HEADER = struct.Struct("<8sII")


def save_matrix_binary(path, arr):
    arr = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def save_matrix_csv(path, arr):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    with open(path, "w", encoding="ascii") as fh:
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row))
            fh.write("\n")


def save_matrix(path, arr, fmt=None):
    if fmt is None:
        fmt = "bin" if str(path).endswith((".bin", ".dlm")) else "csv"
    if fmt == "bin":
        save_matrix_binary(path, arr)
    elif fmt == "csv":
        save_matrix_csv(path, arr)
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def _looks_binary(head):
    return head[: len(MAGIC)] == MAGIC


def load_matrix(path):
    """Read a matrix, sniffing binary vs CSV (and an optional CSV header)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if _looks_binary(head):
            if len(head) < _HEADER.size:
                raise ValueError(f"{path}: truncated binary header")
            _, rows, cols = _HEADER.unpack(head)
            data = np.frombuffer(fh.read(), dtype="<f8")
            if data.size != rows * cols:
                raise ValueError(
                    f"{path}: expected {rows * cols} values, found {data.size}"
                )
            return data.reshape(rows, cols).astype(float)
    return _load_csv(path)


def _load_csv(path):
    with open(path, "r", encoding="utf-8-sig") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    start = 0
    try:
        [float(tok) for tok in lines[0].split(",")]
    except ValueError:
        start = 1  # header row
        if len(lines) == 1:
            raise ValueError(f"{path}: header with no data rows") from None
    rows = []
    width = None
    for idx, line in enumerate(lines[start:], start=start + 1):
        values = [float(tok) for tok in line.split(",")]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ValueError(f"{path}: line {idx} has {len(values)} fields, expected {width}")
        rows.append(values)
    return np.asarray(rows, dtype=float)
