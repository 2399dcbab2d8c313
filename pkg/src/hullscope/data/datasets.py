"""Loaders for IDX (MNIST), CIFAR-10 binary batches and numeric CSV."""

from __future__ import annotations

import csv
import gzip
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .formats import FormatError, is_matrix_file, read_matrix

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}

CIFAR_RECORD = 1 + 3 * 32 * 32


@dataclass
class ImageSet:
    """Images as ``(N, H, W)`` for grayscale or ``(N, C, H, W)`` channel-major colour.

    ``scale`` is ``"raw"`` (0..255) or ``"unit"`` (0..1).
    """

    images: np.ndarray
    labels: Optional[np.ndarray] = None
    scale: str = "raw"

    def __post_init__(self):
        if self.scale not in ("raw", "unit"):
            raise ValueError(f"scale must be 'raw' or 'unit', got {self.scale!r}")
        if self.labels is not None and len(self.labels) != len(self.images):
            raise ValueError(f"{len(self.labels)} labels for {len(self.images)} images")
        top = 255.0 if self.scale == "raw" else 1.0
        if self.images.size and (self.images.min() < 0 or self.images.max() > top):
            raise ValueError(f"pixel values outside the {self.scale} range [0, {top:g}]")

    def __len__(self):
        return len(self.images)

    @property
    def image_shape(self) -> tuple:
        return tuple(self.images.shape[1:])

    def flatten(self) -> np.ndarray:
        """N x (prod of image shape); colour images flatten R plane, G plane, B plane."""
        return self.images.reshape(len(self.images), -1).astype(np.float64)

    def normalized(self, scale: str) -> "ImageSet":
        if scale == self.scale:
            return self
        if scale == "unit":
            return ImageSet(self.images.astype(np.float64) / 255.0, self.labels, "unit")
        return ImageSet(self.images.astype(np.float64) * 255.0, self.labels, "raw")

    def head(self, n: Optional[int]) -> "ImageSet":
        if n is None:
            return self
        return ImageSet(self.images[:n], None if self.labels is None else self.labels[:n], self.scale)


def _open_bytes(path) -> bytes:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_idx(path) -> np.ndarray:
    """Parse any IDX file into an array of its declared dtype and shape."""
    raw = _open_bytes(path)
    if len(raw) < 4:
        raise FormatError(path, len(raw), "truncated IDX magic")
    if raw[0] != 0 or raw[1] != 0:
        raise FormatError(path, 0, f"bad IDX magic {raw[:4].hex()}")
    code, ndim = raw[2], raw[3]
    if code not in _IDX_DTYPES:
        raise FormatError(path, 2, f"unknown IDX type code 0x{code:02x}")
    if ndim < 1:
        raise FormatError(path, 3, "IDX file declares zero dimensions")
    head = 4 + 4 * ndim
    if len(raw) < head:
        raise FormatError(path, len(raw), f"truncated IDX header, need {head} bytes")
    dims = tuple(int.from_bytes(raw[4 + 4 * i: 8 + 4 * i], "big") for i in range(ndim))
    dt = _IDX_DTYPES[code]
    need = int(np.prod(dims)) * dt.itemsize
    if len(raw) - head < need:
        raise FormatError(path, len(raw), f"truncated IDX payload: {len(raw) - head} of {need} bytes")
    if len(raw) - head > need:
        raise FormatError(path, head + need, "trailing bytes after IDX payload")
    return np.frombuffer(raw, dtype=dt, count=int(np.prod(dims)), offset=head).reshape(dims).astype(
        dt.newbyteorder("="))


def load_idx(images_path, labels_path=None) -> ImageSet:
    """MNIST-style IDX images (magic 0x00000803) with optional labels (0x00000801)."""
    raw = _open_bytes(images_path)
    if len(raw) >= 4 and int.from_bytes(raw[:4], "big") != IDX_IMAGES:
        raise FormatError(images_path, 0,
                          f"expected image magic 0x{IDX_IMAGES:08x}, got 0x{raw[:4].hex()}")
    images = read_idx(images_path)
    labels = None
    if labels_path is not None:
        lraw = _open_bytes(labels_path)
        if len(lraw) >= 4 and int.from_bytes(lraw[:4], "big") != IDX_LABELS:
            raise FormatError(labels_path, 0,
                              f"expected label magic 0x{IDX_LABELS:08x}, got 0x{lraw[:4].hex()}")
        labels = read_idx(labels_path).astype(np.int64)
        if len(labels) != len(images):
            raise FormatError(labels_path, 4, f"{len(labels)} labels for {len(images)} images")
    return ImageSet(images, labels, "raw")


def load_cifar10(paths: Union[str, Path, Sequence]) -> ImageSet:
    """CIFAR-10 binary batches: records of 1 label byte + 3072 channel-major pixels.

    Images come back as ``(N, 3, 32, 32)``; flattening yields R, G, B planes.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    images, labels = [], []
    for path in paths:
        raw = _open_bytes(path)
        if len(raw) == 0 or len(raw) % CIFAR_RECORD:
            raise FormatError(path, len(raw) - len(raw) % CIFAR_RECORD,
                              f"file size {len(raw)} is not a multiple of {CIFAR_RECORD}")
        rec = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        bad = np.flatnonzero(rec[:, 0] > 9)
        if bad.size:
            raise FormatError(path, int(bad[0]) * CIFAR_RECORD,
                              f"label {rec[bad[0], 0]} out of range 0..9 in record {bad[0]}")
        labels.append(rec[:, 0].astype(np.int64))
        images.append(rec[:, 1:].reshape(-1, 3, 32, 32))
    return ImageSet(np.concatenate(images), np.concatenate(labels), "raw")


def load_csv(path, has_header: bool = True, label_column: Union[int, str, None] = None,
             delimiter: str = ","):
    """Numeric CSV -> ``(matrix, labels)``; ``labels`` is None without ``label_column``.

    Empty or non-numeric cells raise with their 1-based row and column.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = list(reader)
    header = None
    start = 0
    if has_header:
        if not rows:
            raise FormatError(path, 0, "empty CSV, expected a header row")
        header = [h.strip() for h in rows[0]]
        start = 1
    body = [r for r in rows[start:] if any(cell.strip() for cell in r)]
    if not body:
        raise FormatError(path, 0, "CSV has no data rows")
    width = len(body[0])
    lab_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise ValueError(f"label column {label_column!r} not found in header")
            lab_idx = header.index(label_column)
        else:
            lab_idx = int(label_column) % width
    values = np.empty((len(body), width))
    for r, row in enumerate(body):
        line = r + start + 1
        if len(row) != width:
            raise ValueError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.upper() in ("NA", "NAN", "NULL"):
                raise ValueError(f"{path}: missing value at row {line}, column {c + 1}")
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {cell!r} at row {line}, column {c + 1}")
            if not np.isfinite(values[r, c]):
                raise ValueError(f"{path}: non-finite value at row {line}, column {c + 1}")
    if lab_idx is None:
        return values, None
    labels = values[:, lab_idx]
    return np.delete(values, lab_idx, axis=1), labels


def read_column(path) -> np.ndarray:
    """Single-column CSV of labels or predictions; a non-numeric first row is a header."""
    with Path(path).open(newline="") as fh:
        cells = [row[0].strip() for row in csv.reader(fh) if row and row[0].strip()]
    if cells:
        try:
            float(cells[0])
        except ValueError:
            cells = cells[1:]
    out = []
    for i, c in enumerate(cells):
        try:
            v = float(c)
        except ValueError:
            raise ValueError(f"{path}: non-numeric value {c!r} on data row {i + 1}")
        out.append(int(v) if v.is_integer() else v)
    return np.array(out)


def split_indices(n: int, fraction: float, seed: int):
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(fraction * n))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def split_train_test(matrix, fraction: float = 0.2, seed: int = 0, labels=None):
    """Seeded random split; ``fraction`` of rows go to the test side.

    Returns ``(train, test)``, or ``(train, test, train_labels, test_labels)``
    when labels are given.
    """
    matrix = np.asarray(matrix)
    tr, te = split_indices(len(matrix), fraction, seed)
    if labels is None:
        return matrix[tr], matrix[te]
    labels = np.asarray(labels)
    return matrix[tr], matrix[te], labels[tr], labels[te]


def _resize_axis(x, size, axis):
    n = x.shape[axis]
    if n == size:
        return x
    # half-pixel centres, edge clamped
    src = (np.arange(size) + 0.5) * (n / size) - 0.5
    src = np.clip(src, 0.0, n - 1)
    lo = np.floor(src).astype(int)
    hi = np.minimum(lo + 1, n - 1)
    w = src - lo
    shape = [1] * x.ndim
    shape[axis] = size
    w = w.reshape(shape)
    return np.take(x, lo, axis=axis) * (1.0 - w) + np.take(x, hi, axis=axis) * w


def bilinear_resize(images: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize the last two axes with separable bilinear interpolation."""
    x = np.asarray(images, dtype=np.float64)
    x = _resize_axis(x, height, x.ndim - 2)
    return _resize_axis(x, width, x.ndim - 1)


def to_grayscale_resize(images: ImageSet, height: int, width: int) -> ImageSet:
    """Luminance ``0.299 R + 0.587 G + 0.114 B`` then bilinear resize to ``height x width``."""
    x = images.images.astype(np.float64)
    if x.ndim == 4:
        if x.shape[1] != 3:
            raise ValueError(f"expected 3 colour channels, got {x.shape[1]}")
        x = 0.299 * x[:, 0] + 0.587 * x[:, 1] + 0.114 * x[:, 2]
    elif x.ndim != 3:
        raise ValueError(f"expected (N, H, W) or (N, 3, H, W) images, got {x.shape}")
    out = bilinear_resize(x, height, width)
    top = 255.0 if images.scale == "raw" else 1.0
    return ImageSet(np.clip(out, 0.0, top), images.labels, images.scale)


def sniff_format(path) -> str:
    """One of ``hsmx``, ``idx``, ``cifar``, ``csv``."""
    path = Path(path)
    if is_matrix_file(path):
        return "hsmx"
    raw = _open_bytes(path)[:4]
    if len(raw) == 4 and raw[:2] == b"\x00\x00" and raw[2] in _IDX_DTYPES:
        return "idx"
    name = path.name.lower()
    if name.endswith(".bin") or name.endswith(".bin.gz"):
        return "cifar"
    return "csv"


@dataclass
class LoadedMatrix:
    data: np.ndarray
    kind: str
    image_shape: Optional[tuple] = None
    labels: Optional[np.ndarray] = None
    scale: Optional[str] = None


def load_points(path, normalize: str = "raw", limit: Optional[int] = None,
                has_header: bool = True, label_column=None) -> LoadedMatrix:
    """Load any supported file as an N x d float64 matrix.

    ``normalize`` applies to image sources only (IDX, CIFAR): ``raw`` keeps
    0..255, ``unit`` divides by 255. Matrix and CSV sources are used as stored.
    """
    kind = sniff_format(path)
    labels = None
    if kind in ("idx", "cifar"):
        imgs = load_idx(path) if kind == "idx" else load_cifar10(path)
        imgs = imgs.head(limit).normalized(normalize)
        return LoadedMatrix(imgs.flatten(), kind, imgs.image_shape, imgs.labels, normalize)
    if kind == "hsmx":
        data = read_matrix(path).astype(np.float64)
    else:
        data, labels = load_csv(path, has_header=has_header, label_column=label_column)
    if limit is not None:
        data = data[:limit]
        labels = None if labels is None else labels[:limit]
    return LoadedMatrix(data, kind, None, labels, None)
