"""Separable 2-D Daubechies wavelet transform with periodic extension.

Filters come from spectral factorisation of the Daubechies polynomial, so no
coefficient tables are needed. Each level is an explicit orthogonal analysis
matrix applied to rows and columns; with periodic extension the transform is
orthonormal and Parseval holds exactly up to rounding.

Subband layout of a level: for an input block ``X`` the analysis gives
``W_h @ X @ W_w.T``; the top half of rows are vertical low-pass, the left half
of columns horizontal low-pass.

* ``LL`` low/low (fed to the next level)
* ``LH`` vertical low-pass, horizontal high-pass
* ``HL`` vertical high-pass, horizontal low-pass
* ``HH`` high/high
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import List, Tuple

import numpy as np

MAX_ORDER = 10


@lru_cache(maxsize=None)
def daubechies_filter(order: int) -> np.ndarray:
    """Decomposition low-pass filter of the Daubechies wavelet with ``order`` vanishing moments.

    Length ``2 * order``, sums to ``sqrt(2)``, ordered like the common
    ``dec_lo`` convention (db2 -> [-0.1294, 0.2241, 0.8365, 0.4830]).
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise ValueError(f"Daubechies order must be an integer in 1..{MAX_ORDER}, got {order!r}")
    p = int(order)
    # P(y) = sum_k C(p-1+k, k) y^k with y = sin^2(w/2) = (2 - z - 1/z) / 4
    poly = [comb(p - 1 + k, k) for k in range(p)]
    roots_y = np.roots(poly[::-1]) if p > 1 else np.array([])
    zeros = []
    for y in roots_y:
        # z^2 - (2 - 4y) z + 1 = 0; keep the root inside the unit circle
        zs = np.roots([1.0, -(2.0 - 4.0 * y), 1.0])
        zeros.append(zs[np.argmin(np.abs(zs))])
    h = np.array([1.0])
    for _ in range(p):
        h = np.convolve(h, [1.0, 1.0])
    for z in zeros:
        h = np.convolve(h, [1.0, -z])
    h = np.real(h)
    h = h * (np.sqrt(2.0) / h.sum())
    return h[::-1].copy()


def highpass_from_lowpass(h: np.ndarray) -> np.ndarray:
    n = h.size
    return np.array([(-1) ** (k + 1) * h[n - 1 - k] for k in range(n)])


@lru_cache(maxsize=64)
def analysis_matrix(n: int, order: int) -> np.ndarray:
    """n x n orthogonal matrix of one periodic analysis step (low rows first)."""
    if n < 2 or n % 2:
        raise ValueError(f"signal length must be even and >= 2, got {n}")
    h = daubechies_filter(order)
    g = highpass_from_lowpass(h)
    half = n // 2
    W = np.zeros((n, n))
    for k in range(half):
        for j in range(h.size):
            col = (2 * k + j) % n
            W[k, col] += h[j]
            W[half + k, col] += g[j]
    W.flags.writeable = False
    return W


@dataclass
class WaveletPyramid:
    """Coefficients of a multi-level transform.

    ``details[0]`` is the coarsest level, each entry ``(LH, HL, HH)``.
    Leading axes (for image stacks) are preserved on every array.
    """

    approx: np.ndarray
    details: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]

    @property
    def levels(self) -> int:
        return len(self.details)

    def flatten(self) -> np.ndarray:
        """Approximation first, then LH, HL, HH per level from coarse to fine."""
        lead = self.approx.shape[:-2]
        parts = [self.approx.reshape(lead + (-1,))]
        for bands in self.details:
            parts.extend(b.reshape(lead + (-1,)) for b in bands)
        return np.concatenate(parts, axis=-1)

    def energy(self) -> float:
        total = float(np.sum(self.approx ** 2))
        for bands in self.details:
            total += sum(float(np.sum(b ** 2)) for b in bands)
        return total

    @classmethod
    def zeros_like_shape(cls, shape, levels) -> "WaveletPyramid":
        h, w = shape
        details = []
        for lev in range(levels, 0, -1):
            hh, ww = h >> lev, w >> lev
            details.append(tuple(np.zeros((hh, ww)) for _ in range(3)))
        return cls(np.zeros((h >> levels, w >> levels)), details)


def _check_shape(h, w, levels):
    if levels < 1:
        raise ValueError("levels must be >= 1")
    step = 1 << levels
    if h % step or w % step:
        raise ValueError(
            f"image shape {(h, w)} is not divisible by 2**levels = {step}; pad or crop first")


def dwt2(image, order: int = 4, levels: int = 1) -> WaveletPyramid:
    """Multi-level periodic 2-D DWT of an image or a stack of images (..., H, W)."""
    daubechies_filter(order)
    x = np.asarray(image, dtype=np.float64)
    if x.ndim < 2:
        raise ValueError("dwt2 needs at least a 2-D array")
    _check_shape(x.shape[-2], x.shape[-1], levels)
    details = []
    cur = x
    for _ in range(levels):
        h, w = cur.shape[-2:]
        Wh, Ww = analysis_matrix(h, order), analysis_matrix(w, order)
        c = Wh @ cur @ Ww.T
        hh, hw = h // 2, w // 2
        details.append((c[..., :hh, hw:], c[..., hh:, :hw], c[..., hh:, hw:]))
        cur = c[..., :hh, :hw]
    details.reverse()
    return WaveletPyramid(approx=cur.copy(), details=[tuple(b.copy() for b in d) for d in details])


def idwt2(pyramid: WaveletPyramid, order: int = 4, levels=None) -> np.ndarray:
    """Inverse of :func:`dwt2` for the same filter order."""
    daubechies_filter(order)
    if levels is not None and levels != pyramid.levels:
        raise ValueError(f"pyramid has {pyramid.levels} levels, asked for {levels}")
    cur = np.asarray(pyramid.approx, dtype=np.float64)
    for lh, hl, hh in pyramid.details:
        top = np.concatenate([cur, lh], axis=-1)
        bottom = np.concatenate([hl, hh], axis=-1)
        c = np.concatenate([top, bottom], axis=-2)
        h, w = c.shape[-2:]
        Wh, Ww = analysis_matrix(h, order), analysis_matrix(w, order)
        cur = Wh.T @ c @ Ww
    return cur
