"""Binary checkpoint format for network parameters.

Layout (all integers little-endian)::

    offset 0   4 bytes   magic b"VPIC"
    offset 4   uint32    format version (currently 1)
    offset 8   uint32    header length H in bytes
    offset 12  H bytes   UTF-8 JSON header, keys sorted, no whitespace
    offset 12+H          float64 little-endian parameter array, length header["n_params"]

The header always carries ``widths`` (layer widths), ``n_params`` and ``dtype`` (the in-memory
precision to restore; values are always stored as float64); callers
may add extra JSON-serializable metadata. Files are byte-for-byte reproducible
for equal inputs: no timestamps, deterministic key order.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .nn import Mlp

MAGIC = b"VPIC"
VERSION = 1


class CheckpointError(ValueError):
    pass


def encode(model, meta=None):
    header = dict(meta or {})
    header["widths"] = list(model.widths)
    header["n_params"] = int(model.n_params())
    header["dtype"] = model.buffer.dtype.name
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = model.flat().astype("<f8").tobytes()
    return MAGIC + struct.pack("<II", VERSION, len(blob)) + blob + body


def decode(data):
    if data[:4] != MAGIC:
        raise CheckpointError("not a parameter checkpoint (bad magic)")
    version, hlen = struct.unpack("<II", data[4:12])
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = json.loads(data[12:12 + hlen].decode("utf-8"))
    flat = np.frombuffer(data[12 + hlen:], dtype="<f8").astype(float)
    if flat.size != header["n_params"]:
        raise CheckpointError(f"expected {header['n_params']} parameters, found {flat.size}")
    model = Mlp.create(header["widths"], init="zeros", dtype=header.get("dtype", "float64"))
    model.load_flat(flat)
    return model, header


def save(path, model, meta=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode(model, meta))


def load(path):
    return decode(Path(path).read_bytes())
