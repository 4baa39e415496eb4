"""File formats: CSV fields, JSON potentials and binary containers.

Floats are written as their shortest round-trip decimal (``repr``), so
identical numbers always produce identical bytes.  Every writer replaces
its target atomically (write to a temporary file, then rename).
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grid import Grid, PotentialField

__all__ = [
    "atomic_write",
    "write_field_csv",
    "read_field_csv",
    "write_complex_csv",
    "read_complex_csv",
    "write_pair_csv",
    "write_rows_csv",
    "write_json",
    "read_json",
    "save_potential",
    "load_potential",
    "save_state",
    "load_state",
    "save_matrix",
    "load_matrix",
]

STATE_MAGIC = b"KSFS"
MATRIX_MAGIC = b"KSRM"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def atomic_write(path, data: bytes | str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows_csv(path, header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) if isinstance(x, (float, int, np.floating, np.integer)) else x for x in row])
    atomic_write(path, buf.getvalue())


def write_field_csv(path, grid: Grid, values):
    write_rows_csv(path, ["x", "value"], zip(grid.nodes, np.asarray(values, dtype=float)))


def _read_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ConfigurationError(f"{path} is empty")
    return rows[0], [[float(c) for c in r] for r in rows[1:] if r]


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = _read_csv(path)
    if header[:2] != ["x", "value"]:
        raise ConfigurationError(f"{path}: expected columns x,value")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1]


def write_complex_csv(path, grid: Grid, values):
    values = np.asarray(values, dtype=complex)
    write_rows_csv(path, ["x", "re", "im"], zip(grid.nodes, values.real, values.imag))


def read_complex_csv(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = _read_csv(path)
    if header[:3] != ["x", "re", "im"]:
        raise ConfigurationError(f"{path}: expected columns x,re,im")
    arr = np.array(rows)
    return arr[:, 0], arr[:, 1] + 1j * arr[:, 2]


def write_pair_csv(path, grid: Grid, rho2):
    x = grid.nodes
    rows = ((x[i], x[j], rho2[i, j]) for i in range(grid.n) for j in range(grid.n))
    write_rows_csv(path, ["x", "y", "value"], rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    return obj


def write_json(path, obj):
    atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc


def save_potential(path, v: PotentialField):
    write_json(path, v.to_dict())


def load_potential(path) -> PotentialField:
    return PotentialField.from_dict(read_json(path))


def save_state(path, n: int, N: int, coeffs):
    """Binary container: magic, (n, N, dim) as little-endian uint64, complex128 pairs."""
    coeffs = np.asarray(coeffs, dtype="<c16")
    header = STATE_MAGIC + struct.pack("<3Q", n, N, coeffs.size)
    atomic_write(path, header + coeffs.tobytes())


def load_state(path) -> tuple[int, int, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != STATE_MAGIC:
        raise ConfigurationError(f"{path} is not a state container")
    n, N, dim = struct.unpack("<3Q", data[4:28])
    coeffs = np.frombuffer(data[28:], dtype="<c16")
    if coeffs.size != dim:
        raise ConfigurationError(f"{path}: payload has {coeffs.size} coefficients, header says {dim}")
    return n, N, coeffs.copy()


def save_matrix(path, M):
    """Binary container: magic, (rows, cols) as little-endian uint64, float64 row-major."""
    M = np.ascontiguousarray(M, dtype="<f8")
    atomic_write(path, MATRIX_MAGIC + struct.pack("<2Q", *M.shape) + M.tobytes())


def load_matrix(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != MATRIX_MAGIC:
        raise ConfigurationError(f"{path} is not a matrix container")
    r, c = struct.unpack("<2Q", data[4:20])
    return np.frombuffer(data[20:], dtype="<f8").reshape(r, c).copy()
