"""Binary checkpoints.

Layout (little-endian): magic ``b"BSQ1"``, u32 version = 1, u64 n, f64 t,
then n f64 values each of u, w and f.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .dynamics import State
from .errors import BadMagic, TruncatedFile, VersionMismatch
from .spectral import Field, Grid

MAGIC = b"BSQ1"
VERSION = 1
_HEADER = struct.Struct("<4sIQd")


def dumps_checkpoint(state: State, f: Field) -> bytes:
    n = state.grid.n
    if f.grid != state.grid:
        raise ValueError("forcing and state grids differ")
    head = _HEADER.pack(MAGIC, VERSION, n, state.t)
    body = np.concatenate([state.u.values, state.w.values, f.values]).astype("<f8").tobytes()
    return head + body


def loads_checkpoint(data: bytes) -> tuple[State, Field]:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {data[:4]!r}")
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"header needs {_HEADER.size} bytes, file has {len(data)}")
    _, version, n, t = _HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, reader supports {VERSION}")
    need = _HEADER.size + 3 * n * 8
    if len(data) < need:
        raise TruncatedFile(f"expected {need} bytes for n = {n}, file has {len(data)}")
    if len(data) > need:
        raise TruncatedFile(f"{len(data) - need} trailing bytes after the arrays")
    grid = Grid(int(n))
    arr = np.frombuffer(data, dtype="<f8", count=3 * n, offset=_HEADER.size).astype(float)
    u, w, f = arr[:n], arr[n : 2 * n], arr[2 * n :]
    return State(Field(grid, u), Field(grid, w), t), Field(grid, f)


def save_checkpoint(state: State, f: Field, path) -> None:
    data = dumps_checkpoint(state, f)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def load_checkpoint(path) -> tuple[State, Field]:
    with open(path, "rb") as fh:
        return loads_checkpoint(fh.read())
