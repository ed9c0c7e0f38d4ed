"""Self-describing binary container used for checkpoints and dataset archives.

Layout (all integers little-endian)::

    magic     8 bytes   b"FOILGEN\\0"
    version   uint32    FORMAT_VERSION
    kind      uint32    length of the kind string, followed by its UTF-8 bytes
    hdr_len   uint64    length of the JSON header
    header    hdr_len bytes of UTF-8 JSON, keys sorted, no whitespace
    payload   arrays back to back, in header order, C order

The header holds a free-form ``meta`` object plus an ``arrays`` list of
``{"name", "dtype", "shape", "offset", "nbytes"}`` records, offsets counted
from the start of the payload. Only little-endian float32, float64 and int64
arrays are stored. Writing the same content twice produces the same bytes.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"FOILGEN\0"
FORMAT_VERSION = 1
_DTYPES = {"<f4", "<f8", "<i8"}


class ContainerError(ValueError):
    pass


def _canonical_dtype(arr: np.ndarray) -> str:
    kind = arr.dtype.kind
    if kind == "f":
        return "<f4" if arr.dtype.itemsize == 4 else "<f8"
    if kind in "iub":
        return "<i8"
    raise ContainerError(f"unsupported dtype {arr.dtype}")


def dumps(kind: str, meta: Mapping, arrays: Mapping[str, np.ndarray]) -> bytes:
    records, blobs, offset = [], [], 0
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        dt = _canonical_dtype(arr)
        raw = np.ascontiguousarray(arr, dtype=dt).tobytes()
        records.append({"name": name, "dtype": dt, "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        blobs.append(raw)
        offset += len(raw)
    header = json.dumps({"meta": meta, "arrays": records}, sort_keys=True, separators=(",", ":"), allow_nan=False)
    hdr = header.encode("utf-8")
    kb = kind.encode("utf-8")
    return b"".join(
        [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(kb)), kb, struct.pack("<Q", len(hdr)), hdr]
        + blobs
    )


def loads(data: bytes, expect_kind: str | None = None):
    """Parse container bytes into ``(kind, meta, arrays)``."""
    if data[:8] != MAGIC:
        raise ContainerError("not a foilgen container (bad magic)")
    try:
        (version,) = struct.unpack_from("<I", data, 8)
        (klen,) = struct.unpack_from("<I", data, 12)
        kind = data[16 : 16 + klen].decode("utf-8")
        (hlen,) = struct.unpack_from("<Q", data, 16 + klen)
    except struct.error as exc:
        raise ContainerError(f"truncated container: {exc}") from None
    if version != FORMAT_VERSION:
        raise ContainerError(f"unsupported container version {version}")
    if expect_kind is not None and kind != expect_kind:
        raise ContainerError(f"expected a {expect_kind!r} container, found {kind!r}")
    start = 24 + klen
    header = json.loads(data[start : start + hlen].decode("utf-8"))
    payload = memoryview(data)[start + hlen :]
    arrays = {}
    for rec in header["arrays"]:
        if rec["dtype"] not in _DTYPES:
            raise ContainerError(f"unsupported dtype {rec['dtype']!r}")
        lo, n = rec["offset"], rec["nbytes"]
        if lo + n > len(payload):
            raise ContainerError(f"array {rec['name']!r} runs past end of file")
        arr = np.frombuffer(payload[lo : lo + n], dtype=rec["dtype"]).reshape(rec["shape"]).copy()
        arrays[rec["name"]] = arr
    return kind, header["meta"], arrays


def write(path, kind: str, meta: Mapping, arrays: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(kind, meta, arrays))
    return path


def read(path, expect_kind: str | None = None):
    return loads(Path(path).read_bytes(), expect_kind)
