"""Binary matrix files and image emission.

RawMatrixFile layout (all little-endian)::

    offset  size  field
    0       4     magic b"HSMX"
    4       4     version, u32 = 1
    8       8     rows, u64
    16      8     cols, u64
    24      4*rows*cols  payload, float32, row-major
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

MAGIC = b"HSMX"
VERSION = 1
HEADER = struct.Struct("<4sIQQ")


class FormatError(ValueError):
    """Malformed input file; ``offset`` is the byte position of the problem."""

    def __init__(self, path, offset, message):
        self.path = str(path)
        self.offset = offset
        super().__init__(f"{path}: byte {offset}: {message}")


def atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def encode_matrix(matrix) -> bytes:
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {arr.shape}")
    payload = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(payload)):
        raise ValueError("matrix has non-finite values (after float32 conversion)")
    return HEADER.pack(MAGIC, VERSION, arr.shape[0], arr.shape[1]) + payload.tobytes()


def write_matrix(path, matrix) -> None:
    atomic_write_bytes(path, encode_matrix(matrix))


def decode_matrix(raw: bytes, path="<bytes>") -> np.ndarray:
    if len(raw) < HEADER.size:
        raise FormatError(path, len(raw), f"truncated header ({len(raw)} of {HEADER.size} bytes)")
    magic, version, rows, cols = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(path, 0, f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(path, 4, f"unsupported version {version}")
    need = rows * cols * 4
    have = len(raw) - HEADER.size
    if have != need:
        raise FormatError(path, HEADER.size + min(have, need),
                          f"payload is {have} bytes, expected {need} for {rows}x{cols}")
    data = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(rows, cols)
    bad = ~np.isfinite(data)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise FormatError(path, HEADER.size + 4 * (int(r) * cols + int(c)),
                          f"non-finite value at row {r}, column {c}")
    return data.astype(np.float32)


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    return decode_matrix(raw, path)


def is_matrix_file(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(4) == MAGIC


def _to_u8(img, lo, hi):
    img = np.asarray(img, dtype=np.float64)
    span = hi - lo if hi > lo else 1.0
    return np.clip(np.rint((img - lo) / span * 255.0), 0, 255).astype(np.uint8)


def encode_pnm(img, lo=0.0, hi=1.0) -> bytes:
    """Binary PGM for (H, W) arrays, PPM for (3, H, W) or (H, W, 3)."""
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[0] == 3 and arr.shape[-1] != 3:
        arr = np.moveaxis(arr, 0, -1)
    u8 = _to_u8(arr, lo, hi)
    if u8.ndim == 2:
        h, w = u8.shape
        return f"P5\n{w} {h}\n255\n".encode() + u8.tobytes()
    if u8.ndim == 3 and u8.shape[-1] == 3:
        h, w, _ = u8.shape
        return f"P6\n{w} {h}\n255\n".encode() + u8.tobytes()
    raise ValueError(f"cannot render array of shape {np.shape(img)} as an image")


def encode_png(img, lo=0.0, hi=1.0) -> bytes:
    """Minimal 8-bit grayscale/RGB PNG encoder."""
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[0] == 3 and arr.shape[-1] != 3:
        arr = np.moveaxis(arr, 0, -1)
    u8 = _to_u8(arr, lo, hi)
    if u8.ndim == 2:
        color = 0
        h, w = u8.shape
        rows = u8
    else:
        color = 2
        h, w, _ = u8.shape
        rows = u8.reshape(h, w * 3)
    raw = b"".join(b"\x00" + row.tobytes() for row in rows)

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    ihdr = struct.pack(">IIBBBBB", w, h, 8, color, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


def write_image(path, img, lo=0.0, hi=1.0) -> None:
    path = Path(path)
    if path.suffix.lower() == ".png":
        atomic_write_bytes(path, encode_png(img, lo, hi))
    else:
        atomic_write_bytes(path, encode_pnm(img, lo, hi))


def read_pnm(path) -> np.ndarray:
    """Read back a binary PGM/PPM written by :func:`encode_pnm`."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    kind = parts[0]
    w, h = map(int, parts[1].split())
    data = np.frombuffer(parts[3], dtype=np.uint8)
    if kind == b"P5":
        return data.reshape(h, w)
    if kind == b"P6":
        return data.reshape(h, w, 3)
    raise FormatError(path, 0, f"unsupported PNM type {kind!r}")
