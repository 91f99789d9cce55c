"""Flat-file formats: CSV grids, 16-bit PGM heatmaps, JSON reports.

All writers go through a temporary file in the target directory followed
by ``os.replace``, so readers never see a partial file.
"""
from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

__all__ = ["write_csv", "read_csv", "write_pgm", "write_json", "dumps_json", "atomic_write"]


_UMASK = os.umask(0)
os.umask(_UMASK)


def atomic_write(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o666 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return "%.17g" % x


def csv_bytes(rect, nx: int, ny: int, values: np.ndarray, tol: float) -> bytes:
    x0, x1, y0, y1 = rect
    lines = [f"# rect {_fmt(x0)} {_fmt(x1)} {_fmt(y0)} {_fmt(y1)} {nx} {ny} {_fmt(tol)}"]
    for row in values:
        lines.append(",".join(_fmt(float(v)) for v in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def write_csv(path: str, rect, nx: int, ny: int, values: np.ndarray, tol: float) -> None:
    """Header ``# rect x0 x1 y0 y1 nx ny tol`` then ``ny`` rows of ``nx`` values,
    bottom row (``y0``) first; masked cells are written as ``nan``."""
    atomic_write(path, csv_bytes(rect, nx, ny, values, tol))


def read_csv(path: str):
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if header[:2] != ["#", "rect"]:
            raise ValueError(f"{path}: missing '# rect' header")
        x0, x1, y0, y1 = (float(v) for v in header[2:6])
        nx, ny = int(header[6]), int(header[7])
        tol = float(header[8])
        values = np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])
    if values.shape != (ny, nx):
        raise ValueError(f"{path}: expected {ny}x{nx} values, got {values.shape}")
    return (x0, x1, y0, y1), nx, ny, values, tol


def write_pgm(path: str, values: np.ndarray) -> dict:
    """16-bit binary PGM, top row = largest imaginary part.

    Values map linearly from ``[min, max]`` (over finite entries) onto
    ``[0, 65535]``; NaN cells become 0.  The mapping is written to
    ``<path>.json`` and returned.
    """
    finite = values[np.isfinite(values)]
    vmin = float(finite.min()) if finite.size else 0.0
    vmax = float(finite.max()) if finite.size else 0.0
    span = vmax - vmin
    scaled = np.zeros(values.shape)
    if span > 0:
        scaled = np.where(np.isfinite(values), (values - vmin) / span, 0.0)
    pix = np.rint(scaled * 65535).astype(">u2")[::-1]
    ny, nx = values.shape
    atomic_write(path, f"P5\n{nx} {ny}\n65535\n".encode("ascii") + pix.tobytes())
    meta = {"min": vmin, "max": vmax, "maxval": 65535, "nan_pixel": 0, "orientation": "top row is y1"}
    write_json(path + ".json", meta)
    return meta


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def write_json(path: str, obj) -> None:
    atomic_write(path, dumps_json(obj).encode("utf-8"))


def _plain(obj):
    """Convert numpy scalars, complex numbers and tuples to JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj
