"""Binary field snapshots with a JSON sidecar.

Layout (little endian)::

    8 bytes   magic b"TFMAG\\x00\\x01\\x00"
    u32       format version
    u32 u32   nx, ny
    f64       h
    f64 f64   grid origin
    u32       length of the shape descriptor, then that many bytes of JSON
    f64 f64   epsilon, Q
    f64 * 3 * nx * ny   (m1, m2, m3) triples in row-major cell order
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .field_energy import Magnetization2D
from .geometry import DomainMask, shape_from_descriptor

MAGIC = b"TFMAG\x00\x01\x00"
VERSION = 1


class SnapshotError(ValueError):
    pass


def _mask_descriptor(mask: DomainMask) -> bytes:
    desc = {"shape": mask.shape.descriptor(), "region": mask.region}
    return json.dumps(desc, sort_keys=True).encode()


def dumps(m: Magnetization2D, epsilon: float, Q: float) -> bytes:
    mask = m.mask
    desc = _mask_descriptor(mask)
    head = MAGIC + struct.pack("<III3dI", VERSION, mask.nx, mask.ny, mask.h, *mask.origin, len(desc))
    body = struct.pack("<2d", float(epsilon), float(Q))
    triples = np.ascontiguousarray(np.moveaxis(m.values, 0, -1), dtype="<f8")
    return head + desc + body + triples.tobytes()


def loads(data: bytes) -> tuple[Magnetization2D, float, float]:
    if data[:8] != MAGIC:
        raise SnapshotError("not a field snapshot")
    version, nx, ny, h, ox, oy, dlen = struct.unpack_from("<III3dI", data, 8)
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    off = 8 + struct.calcsize("<III3dI")
    desc = json.loads(data[off : off + dlen])
    off += dlen
    eps, Q = struct.unpack_from("<2d", data, off)
    off += 16
    expected = 3 * nx * ny * 8
    if len(data) - off != expected:
        raise SnapshotError("snapshot payload has the wrong size")
    triples = np.frombuffer(data, dtype="<f8", count=3 * nx * ny, offset=off).reshape(ny, nx, 3)
    shape = shape_from_descriptor(desc["shape"])
    mask = DomainMask.from_shape(shape, h, origin=(ox, oy), nx=nx, ny=ny)
    if desc.get("region", "interior") != "interior":
        mask = mask.with_inside(np.any(triples != 0, axis=-1), region=desc["region"])
    return Magnetization2D(mask, np.moveaxis(triples, -1, 0)), eps, Q


def save(path, m: Magnetization2D, epsilon: float, Q: float, meta: dict | None = None) -> Path:
    path = Path(path)
    path.write_bytes(dumps(m, epsilon, Q))
    sidecar = {
        "format": "thinfilm-snapshot",
        "version": VERSION,
        "nx": m.mask.nx,
        "ny": m.mask.ny,
        "h": m.mask.h,
        "origin": list(m.mask.origin),
        "shape": m.mask.shape.descriptor(),
        "epsilon": epsilon,
        "Q": Q,
    }
    if meta:
        sidecar["meta"] = meta
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    return path


def load(path) -> tuple[Magnetization2D, float, float]:
    return loads(Path(path).read_bytes())
