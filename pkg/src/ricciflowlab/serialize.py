"""Field and report serialization.

GridField files come in two flavors:

* CSV -- leading comment lines carry the geometry tag, then the values
  in row-major order (one grid row per line on the torus, a single line
  of mode coefficients on the sphere).
* binary -- magic ``RFLGRID1``, a little-endian uint32 header length,
  a JSON header, then raw float64 little-endian values in row-major
  order.

All multi-byte binary data is little-endian regardless of platform.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "write_gridfield",
    "read_gridfield",
    "write_gridfield_binary",
    "read_gridfield_binary",
    "write_series_csv",
]

_MAGIC = b"RFLGRID1"


def _header_dict(key: tuple) -> dict:
    if key[0] == "torus":
        return {"kind": "torus", "grid_size": key[1], "period": key[2]}
    return {"kind": "sphere", "dim": key[1], "mode_cutoff": key[2]}


def _key_from_header(h: dict) -> tuple:
    if h["kind"] == "torus":
        return ("torus", int(h["grid_size"]), float(h["period"]))
    return ("sphere", int(h["dim"]), int(h["mode_cutoff"]))


def write_gridfield(path, key: tuple, values: np.ndarray) -> None:
    path = Path(path)
    h = _header_dict(key)
    lines = ["# ricciflowlab gridfield v1"]
    lines.append("# " + " ".join(f"{k}={v}" for k, v in sorted(h.items())))
    lines.append("# layout=row-major")
    vals = np.atleast_2d(np.asarray(values, dtype=float))
    for row in vals:
        lines.append(",".join(repr(float(x)) for x in row))
    path.write_text("\n".join(lines) + "\n")


def read_gridfield(path) -> tuple[tuple, np.ndarray]:
    path = Path(path)
    header: dict = {}
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    k, v = token.split("=", 1)
                    header[k] = v
            continue
        if line.strip():
            rows.append([float(x) for x in line.split(",")])
    key = _key_from_header(header)
    vals = np.asarray(rows, dtype=float)
    if key[0] == "sphere":
        vals = vals.reshape(-1)
    return key, vals


def write_gridfield_binary(path, key: tuple, values: np.ndarray) -> None:
    path = Path(path)
    vals = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    header = dict(_header_dict(key), shape=list(vals.shape), dtype="<f8")
    hbytes = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(hbytes)))
        fh.write(hbytes)
        fh.write(vals.tobytes(order="C"))


def read_gridfield_binary(path) -> tuple[tuple, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError("bad gridfield magic")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        vals = np.frombuffer(fh.read(), dtype="<f8").reshape(header["shape"]).astype(float)
    return _key_from_header(header), vals


def write_series_csv(path, columns: dict[str, np.ndarray]) -> None:
    """Write named time-series columns as plain CSV with a header row."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    n = len(arrays[0])
    lines = [",".join(names)]
    for i in range(n):
        lines.append(",".join(repr(float(a[i])) for a in arrays))
    path.write_text("\n".join(lines) + "\n")
