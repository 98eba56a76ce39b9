"""MLN1 binary field dumps with a JSON sidecar.

Layout: magic ``b"MLN1"``, ``u32 n``, ``f64 L``, then ``n^3`` little-endian
``f64`` samples with x varying fastest.  The sidecar ``<file>.json`` holds
``{"n", "L", "role", "params"}``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .spectral import Field, Grid3

__all__ = ["MAGIC", "write_field", "read_field", "FieldFormatError"]

MAGIC = b"MLN1"
_HEADER = struct.Struct("<4sId")


class FieldFormatError(ValueError):
    """The file is not a valid MLN1 dump."""


def _sidecar(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_field(path, field: Field, role: str = "u", params: dict | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    g = field.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, g.n, g.box_len))
        fh.write(np.asarray(field.values.ravel(order="F"), dtype="<f8").tobytes())
    meta = {"n": g.n, "L": g.box_len, "role": role, "params": params or {}}
    if extra:
        meta.update(extra)
    _sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path


def read_field(path) -> tuple[Field, dict]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise FieldFormatError(f"{path}: truncated header")
    magic, n, L = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}")
    body = data[_HEADER.size :]
    if len(body) != 8 * n**3:
        raise FieldFormatError(f"{path}: expected {8 * n ** 3} sample bytes, found {len(body)}")
    vals = np.frombuffer(body, dtype="<f8").reshape((n, n, n), order="F")
    side = _sidecar(path)
    meta = json.loads(side.read_text()) if side.exists() else {"n": n, "L": L}
    return Field(Grid3(n, L), vals), meta
