"""Core data containers shared by the hull solver and the reporting layers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np


class DimensionError(ValueError):
    """Raised when a query and a point set disagree on dimension."""


class PointSet:
    """Immutable N x d matrix of training points.

    Rows are points. Storage is float64 whatever the input dtype, so every
    accumulation downstream happens in double precision.

    Parameters
    ----------
    data : array_like, shape (N, d)
    bounds : tuple of (lo, hi), optional
        Either two scalars or two length-d arrays describing the domain box.
    """

    __slots__ = ("_data", "_bounds", "_row_norms_sq")

    def __init__(self, data, bounds=None):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ValueError(f"point data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"point set needs N >= 1 and d >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise ValueError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        if bounds is not None:
            lo = np.broadcast_to(np.asarray(bounds[0], dtype=np.float64), arr.shape[1:]).copy()
            hi = np.broadcast_to(np.asarray(bounds[1], dtype=np.float64), arr.shape[1:]).copy()
            if np.any(lo > hi):
                raise ValueError("bounds have lo > hi")
            if np.any(arr < lo) or np.any(arr > hi):
                raise ValueError("point data lies outside the declared bounds")
            lo.flags.writeable = False
            hi.flags.writeable = False
            bounds = (lo, hi)
        arr.flags.writeable = False
        norms = np.einsum("ij,ij->i", arr, arr)
        norms.flags.writeable = False
        self._data = arr
        self._bounds = bounds
        self._row_norms_sq = norms

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def bounds(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        return self._bounds

    @property
    def row_norms_sq(self) -> np.ndarray:
        return self._row_norms_sq

    @property
    def n_points(self) -> int:
        return self._data.shape[0]

    @property
    def dim(self) -> int:
        return self._data.shape[1]

    def __len__(self) -> int:
        return self.n_points

    def __repr__(self) -> str:
        return f"PointSet(n_points={self.n_points}, dim={self.dim})"

    def subset(self, indices) -> "PointSet":
        return PointSet(self._data[np.asarray(indices)], bounds=self._bounds)

    def contains_box(self, x) -> bool:
        """True when ``x`` respects the declared bounds (or none are set)."""
        if self._bounds is None:
            return True
        x = np.asarray(x)
        return bool(np.all(x >= self._bounds[0]) and np.all(x <= self._bounds[1]))


def as_query(points: PointSet, query, index: Optional[int] = None) -> np.ndarray:
    """Validate a query vector against ``points`` and return it as float64."""
    where = "" if index is None else f" (query {index})"
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1:
        q = q.reshape(-1) if q.size == points.dim else q
    if q.ndim != 1 or q.shape[0] != points.dim:
        raise DimensionError(
            f"query dimension {q.shape} does not match point dimension {points.dim}{where}")
    if not np.all(np.isfinite(q)):
        raise ValueError(f"query has non-finite entries{where}")
    return np.ascontiguousarray(q)


@dataclass(frozen=True)
class SimplexCoefficients:
    """Sparse convex-combination weights: sorted ``(index, weight)`` pairs."""

    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")

    @property
    def support(self) -> list:
        return [(int(i), float(w)) for i, w in zip(self.indices, self.weights)]

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.indices] = self.weights
        return out

    @classmethod
    def from_dense(cls, alpha: np.ndarray) -> "SimplexCoefficients":
        idx = np.flatnonzero(alpha > 0)
        w = alpha[idx].astype(np.float64)
        w = w / w.sum()
        return cls(indices=idx.astype(np.int64), weights=w)


LINE_SEARCHES = ("exact", "fixed-step")
TIE_BREAKS = ("lowest-index",)


@dataclass(frozen=True)
class SolverConfig:
    """Settings for the away-step Frank-Wolfe projection.

    ``gap_tolerance=None`` means ``1e-6 * max(1, ||q||^2)``, evaluated per query.
    """

    gap_tolerance: Optional[float] = None
    max_iterations: int = 100_000
    tie_break: str = "lowest-index"
    line_search: str = "exact"
    debug: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.gap_tolerance is not None and not self.gap_tolerance > 0:
            raise ValueError("gap_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.line_search not in LINE_SEARCHES:
            raise ValueError(f"line_search must be one of {LINE_SEARCHES}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def tolerance_for(self, q: np.ndarray) -> float:
        if self.gap_tolerance is not None:
            return float(self.gap_tolerance)
        return 1e-6 * max(1.0, float(np.dot(q, q)))


@dataclass
class ProjectionResult:
    coefficients: SimplexCoefficients
    projection: np.ndarray
    distance: float
    dual_gap: float
    iterations: int
    converged: bool
    gap_tolerance: float = float("nan")
    trace: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "distance": self.distance,
            "dual_gap": self.dual_gap,
            "gap_tolerance": self.gap_tolerance,
            "iterations": self.iterations,
            "converged": self.converged,
            "support": [[i, w] for i, w in self.coefficients.support],
        }


def stack_queries(points: PointSet, queries: Sequence) -> list:
    return [as_query(points, q, i) for i, q in enumerate(queries)]
