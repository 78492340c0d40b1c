"""On-disk formats: binary PGM fringes, F32R float rasters, FPTW checkpoints.

Intensities are quantized to 8 bits (round half up) only when written as PGM;
everything else stays float32/float64.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

F32R_MAGIC = b"F32R"
FPTW_MAGIC = b"FPTW"
FPTW_VERSION = 1


def quantize_u8(intensity: np.ndarray) -> np.ndarray:
    """Normalized [0, 1] floats to 0..255, round half up."""
    levels = np.floor(np.asarray(intensity, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(levels, 0, 255).astype(np.uint8)


def dequantize_u8(levels: np.ndarray) -> np.ndarray:
    return np.asarray(levels, dtype=np.float64) / 255.0


def write_pgm(path, intensity: np.ndarray) -> None:
    """Write a normalized intensity grid as binary PGM (P5, maxval 255)."""
    data = quantize_u8(intensity)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM into a normalized float64 grid."""
    with open(path, "rb") as fh:
        raw = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos] in b" \t\r\n":
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and raw[pos] not in b" \t\r\n":
            pos += 1
        fields.append(raw[start:pos])
    pos += 1  # single whitespace byte after maxval
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM: magic {fields[0]!r}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    data = np.frombuffer(raw, dtype=np.uint8, count=w * h, offset=pos)
    return dequantize_u8(data.reshape(h, w))


def write_f32r(path, raster: np.ndarray) -> None:
    """Write a float raster: magic, u32 width, u32 height, row-major f32 LE."""
    raster = np.asarray(raster, dtype="<f4")
    if raster.ndim != 2:
        raise ValueError("raster must be 2-D")
    h, w = raster.shape
    with open(path, "wb") as fh:
        fh.write(F32R_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(raster.tobytes())


def read_f32r(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != F32R_MAGIC:
            raise ValueError(f"not an F32R raster: magic {magic!r}")
        w, h = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(4 * w * h), dtype="<f4")
    if data.size != w * h:
        raise ValueError("truncated F32R raster")
    return data.reshape(h, w).copy()


def write_checkpoint(path, fingerprint: int, tensors: dict) -> None:
    """Write named float32 tensors: FPTW, version, fingerprint, count, entries.

    Each entry: u32 name length, name bytes, u32 rank, u32 dims, f32 LE data.
    """
    with open(path, "wb") as fh:
        fh.write(FPTW_MAGIC)
        fh.write(struct.pack("<I", FPTW_VERSION))
        fh.write(struct.pack("<Q", fingerprint & 0xFFFFFFFFFFFFFFFF))
        fh.write(struct.pack("<I", len(tensors)))
        for name, tensor in tensors.items():
            arr = np.ascontiguousarray(tensor, dtype="<f4")
            name_bytes = name.encode("utf-8")
            fh.write(struct.pack("<I", len(name_bytes)))
            fh.write(name_bytes)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def read_checkpoint(path):
    """Read an FPTW checkpoint; returns (fingerprint, dict of name -> array)."""
    with open(path, "rb") as fh:
        if fh.read(4) != FPTW_MAGIC:
            raise ValueError("not an FPTW checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != FPTW_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        (fingerprint,) = struct.unpack("<Q", fh.read(8))
        (count,) = struct.unpack("<I", fh.read(4))
        tensors = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            dims = struct.unpack(f"<{rank}I", fh.read(4 * rank))
            n = int(np.prod(dims)) if rank else 1
            data = np.frombuffer(fh.read(4 * n), dtype="<f4")
            tensors[name] = data.reshape(dims).copy()
    return fingerprint, tensors


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
