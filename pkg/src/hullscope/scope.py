"""Interpolation/extrapolation partition of a query set and distance-based OOD scoring.

A query is in the interpolation set when its distance to the training hull
is at most ``tol`` and in the extrapolation set otherwise. Accuracies on the
two sets estimate the interpolation and extrapolation parts of a model's
generalization; the model itself only appears as a predictions vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .hull.solver import _membership_config, batch_project, project_to_hull
from .metrics import DEFAULT_TOL
from .types import DimensionError, PointSet, SolverConfig


@dataclass
class ScopePartition:
    inside_indices: np.ndarray
    outside_indices: np.ndarray
    tol: float
    distances: np.ndarray

    @property
    def n_queries(self) -> int:
        return int(self.distances.size)

    def to_dict(self) -> dict:
        return {
            "tol": self.tol,
            "n_inside": int(self.inside_indices.size),
            "n_outside": int(self.outside_indices.size),
            "inside_indices": self.inside_indices.tolist(),
            "outside_indices": self.outside_indices.tolist(),
        }


def partition_from_distances(distances, tol: float) -> ScopePartition:
    if not tol > 0:
        raise ValueError("tol must be positive")
    distances = np.asarray(distances, dtype=np.float64)
    inside = distances <= tol
    return ScopePartition(np.flatnonzero(inside), np.flatnonzero(~inside), float(tol), distances)


def split_by_hull(points: PointSet, queries: Sequence, config: Optional[SolverConfig] = None,
                  tol: float = DEFAULT_TOL, *, threads=None) -> ScopePartition:
    """Membership of every query, using the tightened gap of :func:`membership`."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    cfg = _membership_config(config, tol)
    results = batch_project(points, queries, cfg, threads=threads)
    return partition_from_distances([r.distance for r in results], tol)


@dataclass
class GeneralizationReport:
    n_inside: int
    n_outside: int
    correct_inside: int
    correct_outside: int

    @property
    def accuracy_inside(self) -> Optional[float]:
        return self.correct_inside / self.n_inside if self.n_inside else None

    @property
    def accuracy_outside(self) -> Optional[float]:
        return self.correct_outside / self.n_outside if self.n_outside else None

    @property
    def overall_fraction(self) -> Fraction:
        return Fraction(self.correct_inside + self.correct_outside, self.n_inside + self.n_outside)

    @property
    def accuracy(self) -> float:
        return float(self.overall_fraction)

    def to_dict(self) -> dict:
        return {
            "n_queries": self.n_inside + self.n_outside,
            "n_inside": self.n_inside,
            "n_outside": self.n_outside,
            "correct_inside": self.correct_inside,
            "correct_outside": self.correct_outside,
            "accuracy_inside": self.accuracy_inside,
            "accuracy_outside": self.accuracy_outside,
            "accuracy": self.accuracy,
        }


def generalization_report(partition: ScopePartition, predictions, labels) -> GeneralizationReport:
    """Accuracy on the inside-hull and outside-hull queries separately.

    An empty subset has undefined (``None``) accuracy, never zero.
    """
    pred = np.asarray(predictions)
    lab = np.asarray(labels)
    n = partition.n_queries
    if pred.shape != (n,) or lab.shape != (n,):
        raise ValueError(
            f"predictions ({pred.shape[0] if pred.ndim else 0}) and labels "
            f"({lab.shape[0] if lab.ndim else 0}) must both have {n} entries")
    hit = pred == lab
    if n == 0:
        raise ValueError("no queries")
    return GeneralizationReport(
        n_inside=int(partition.inside_indices.size),
        n_outside=int(partition.outside_indices.size),
        correct_inside=int(hit[partition.inside_indices].sum()),
        correct_outside=int(hit[partition.outside_indices].sum()),
    )


def ood_score(points: PointSet, query, config: Optional[SolverConfig] = None) -> float:
    """Distance to the training hull, used as an out-of-distribution score."""
    return project_to_hull(points, query, config).distance


@dataclass
class OodReport:
    in_dist_distances: np.ndarray
    out_dist_distances: np.ndarray
    threshold: float
    tpr: float
    fpr: float
    histogram: dict

    @property
    def youden(self) -> float:
        return self.tpr - self.fpr

    def to_dict(self) -> dict:
        return {
            "n_in": int(self.in_dist_distances.size),
            "n_out": int(self.out_dist_distances.size),
            "threshold": self.threshold,
            "rule": "flag out-of-distribution when distance > threshold",
            "tpr": self.tpr,
            "fpr": self.fpr,
            "youden": self.youden,
            "median_in": float(np.median(self.in_dist_distances)),
            "median_out": float(np.median(self.out_dist_distances)),
            "histogram": self.histogram,
        }


def youden_threshold(in_scores, out_scores):
    """Threshold ``t`` maximising ``P(out > t) - P(in > t)`` over observed scores.

    The smallest maximiser wins. Returns ``(t, tpr, fpr)``.
    """
    ins = np.sort(np.asarray(in_scores, dtype=np.float64))
    outs = np.sort(np.asarray(out_scores, dtype=np.float64))
    cands = np.unique(np.concatenate([ins, outs]))
    tpr = 1.0 - np.searchsorted(outs, cands, side="right") / outs.size
    fpr = 1.0 - np.searchsorted(ins, cands, side="right") / ins.size
    best = int(np.argmax(tpr - fpr))
    return float(cands[best]), float(tpr[best]), float(fpr[best])


def ood_report_from_distances(in_d, out_d, bins: int = 50) -> OodReport:
    in_d = np.asarray(in_d, dtype=np.float64)
    out_d = np.asarray(out_d, dtype=np.float64)
    if in_d.size == 0 or out_d.size == 0:
        raise ValueError("both query populations must be non-empty")
    t, tpr, fpr = youden_threshold(in_d, out_d)
    top = float(max(in_d.max(), out_d.max()))
    top = top if top > 0 else 1.0
    c_in, edges = np.histogram(in_d, bins=bins, range=(0.0, top))
    c_out, _ = np.histogram(out_d, bins=bins, range=(0.0, top))
    hist = {"edges": edges.tolist(), "in_counts": c_in.tolist(), "out_counts": c_out.tolist()}
    return OodReport(in_d, out_d, t, tpr, fpr, hist)


def ood_separation_report(points: PointSet, in_dist_queries, out_dist_queries,
                          config: Optional[SolverConfig] = None, bins: int = 50,
                          *, threads=None) -> OodReport:
    """Hull distances of two populations and the Youden-optimal split between them."""
    for name, qs in (("in-distribution", in_dist_queries), ("out-of-distribution", out_dist_queries)):
        if len(qs) == 0:
            raise ValueError(f"{name} query set is empty")
        dims = {np.size(q) for q in qs}
        if dims != {points.dim}:
            raise DimensionError(
                f"{name} queries have dimension {sorted(dims)} but the training set has "
                f"{points.dim}; convert images first (e.g. to_grayscale_resize to the training shape)")
    in_d = [r.distance for r in batch_project(points, in_dist_queries, config, threads=threads)]
    out_d = [r.distance for r in batch_project(points, out_dist_queries, config, threads=threads)]
    return ood_report_from_distances(in_d, out_d, bins)
