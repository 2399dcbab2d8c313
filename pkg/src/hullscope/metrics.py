"""Hull diameters, distance distributions and projection deltas."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hull.solver import batch_project, project_to_hull
from .types import PointSet, SolverConfig, as_query

DEFAULT_BLOCK_SIZE = 2048
DEFAULT_BINS = 50
DEFAULT_TOL = 1e-3

#: lower-bound factor guaranteed by the furthest-point sweep heuristic
APPROX_FACTOR = 0.5

_EPS = np.finfo(np.float64).eps


def _pair_sq_dists(V, I, J):
    diff = V[I] - V[J]
    return (diff * diff).sum(axis=1)


def diameter_exact(points: PointSet, block_size: int = DEFAULT_BLOCK_SIZE) -> float:
    """Maximum pairwise Euclidean distance, which is the diameter of the hull.

    Squared distances are screened block by block through Gram products on
    centred data. Every pair whose screened value lies within the rounding
    bound of the running maximum is re-evaluated directly as
    ``sum((V[i] - V[j])**2)``, so the returned value is the exact maximum of
    the direct pairwise distances. Extra memory is ``O(block_size**2)``.
    """
    n = points.n_points
    if n < 2:
        raise ValueError("diameter needs at least two points")
    if block_size < 1:
        raise ValueError("block_size must be >= 1")
    V = points.data
    X = V - V.mean(axis=0)
    norms = np.einsum("ij,ij->i", X, X)
    # rounding bound on ||x||^2 + ||y||^2 - 2<x,y> for any pair
    margin = 4.0 * (points.dim + 4) * _EPS * 2.0 * float(norms.max())
    # centring perturbs each coordinate difference by up to ``shift``
    shift = 4.0 * _EPS * float(np.abs(V).max()) * np.sqrt(points.dim)
    margin += 4.0 * np.sqrt(float(norms.max())) * shift + shift * shift + np.finfo(float).tiny

    best = -np.inf
    cand_i, cand_j, cand_v = [], [], []
    for a in range(0, n, block_size):
        Xa, na = X[a:a + block_size], norms[a:a + block_size]
        for b in range(a, n, block_size):
            Xb, nb = X[b:b + block_size], norms[b:b + block_size]
            D2 = na[:, None] + nb[None, :] - 2.0 * (Xa @ Xb.T)
            if a == b:
                D2[np.tril_indices(D2.shape[0])] = -np.inf
            m = float(D2.max())
            if m > best:
                best = m
            ii, jj = np.nonzero(D2 >= best - 2.0 * margin)
            if ii.size:
                cand_i.append(ii + a)
                cand_j.append(jj + b)
                cand_v.append(D2[ii, jj])
    I = np.concatenate(cand_i)
    J = np.concatenate(cand_j)
    keep = np.concatenate(cand_v) >= best - 2.0 * margin
    exact = _pair_sq_dists(V, I[keep], J[keep])
    return float(np.sqrt(exact.max()))


def diameter_naive(points: PointSet) -> float:
    """O(N^2) reference: every pair evaluated directly."""
    V = points.data
    best = 0.0
    for i in range(points.n_points - 1):
        diff = V[i + 1:] - V[i]
        best = max(best, float((diff * diff).sum(axis=1).max()))
    return float(np.sqrt(best))


def diameter_approx(points: PointSet, sweeps: int = 2) -> float:
    """Furthest-point sweep lower bound on the diameter.

    Starts from the point furthest from the centroid and hops to the furthest
    point ``sweeps`` times, keeping the best pair seen. The result is at most
    the exact diameter and at least ``APPROX_FACTOR`` times it.
    """
    if points.n_points < 2:
        raise ValueError("diameter needs at least two points")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    V = points.data
    c = V.mean(axis=0)
    cur = int(np.argmax(((V - c) ** 2).sum(axis=1)))
    best = 0.0
    for _ in range(sweeps):
        d2 = ((V - V[cur]) ** 2).sum(axis=1)
        nxt = int(np.argmax(d2))
        best = max(best, float(d2[nxt]))
        if nxt == cur:
            break
        cur = nxt
    return float(np.sqrt(best))


@dataclass
class DistanceReport:
    distances: np.ndarray
    diameter: float
    ratios: np.ndarray
    fraction_outside: float
    summary: dict
    histogram: dict
    tol: float
    diameter_method: str = "exact"
    converged: np.ndarray = field(default=None, repr=False)

    @property
    def outside(self) -> np.ndarray:
        return self.distances > self.tol

    def to_dict(self) -> dict:
        return {
            "n_queries": int(self.distances.size),
            "diameter": self.diameter,
            "diameter_method": self.diameter_method,
            "tol": self.tol,
            "fraction_outside": self.fraction_outside,
            "n_outside": int(self.outside.sum()),
            "summary": self.summary,
            "histogram": self.histogram,
            "n_unconverged": int((~self.converged).sum()) if self.converged is not None else 0,
        }


def _histogram(values: np.ndarray, bins: int, upper: Optional[float] = None) -> dict:
    top = float(values.max()) if upper is None else float(upper)
    if not top > 0:
        top = 1.0
    counts, edges = np.histogram(values, bins=bins, range=(0.0, top))
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def summarize(values: np.ndarray) -> dict:
    return {
        "min": float(values.min()),
        "max": float(values.max()),
        "mean": float(np.mean(values)),
        "median": float(np.median(values)),
    }


def report_from_distances(distances, diameter, tol=DEFAULT_TOL, bins=DEFAULT_BINS,
                          diameter_method="exact", converged=None) -> DistanceReport:
    distances = np.asarray(distances, dtype=np.float64)
    if distances.size == 0:
        raise ValueError("distance report needs at least one query")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    ratios = distances / diameter
    return DistanceReport(
        distances=distances,
        diameter=float(diameter),
        ratios=ratios,
        fraction_outside=float(np.count_nonzero(distances > tol)) / distances.size,
        summary=summarize(ratios),
        histogram=_histogram(distances, bins),
        tol=float(tol),
        diameter_method=diameter_method,
        converged=np.ones(distances.size, bool) if converged is None else np.asarray(converged),
    )


def distance_report(points: PointSet, queries: Sequence, config: Optional[SolverConfig] = None,
                    tol: float = DEFAULT_TOL, bins: int = DEFAULT_BINS, *,
                    approx_diameter: bool = False, sweeps: int = 2,
                    block_size: int = DEFAULT_BLOCK_SIZE, threads=None) -> DistanceReport:
    """Distances of ``queries`` to the hull, relative to the hull diameter."""
    if len(queries) == 0:
        raise ValueError("distance report needs at least one query")
    results = batch_project(points, queries, config, threads=threads)
    if approx_diameter:
        diam, method = diameter_approx(points, sweeps), "approx"
    else:
        diam, method = diameter_exact(points, block_size), "exact"
    return report_from_distances(
        [r.distance for r in results], diam, tol, bins, method,
        converged=np.array([r.converged for r in results]))


@dataclass
class ProjectionDelta:
    original: np.ndarray
    delta: np.ndarray
    on_hull: np.ndarray
    distance: float


def projection_delta(points: PointSet, query, config: Optional[SolverConfig] = None,
                     result=None) -> ProjectionDelta:
    """Smallest perturbation moving ``query`` onto the hull."""
    q = as_query(points, query)
    res = project_to_hull(points, q, config) if result is None else result
    delta = q - res.projection
    # defined through delta so that original - delta == on_hull bit for bit
    on_hull = q - delta
    return ProjectionDelta(original=q, delta=delta, on_hull=on_hull, distance=res.distance)


def rank_by_distance(points: PointSet, queries: Sequence, config=None, k: int = 10, *,
                     distances=None, threads=None) -> list:
    """Indices of the ``k`` queries furthest from the hull, furthest first."""
    if distances is None:
        distances = [r.distance for r in batch_project(points, queries, config, threads=threads)]
    distances = np.asarray(distances)
    if k < 0 or k > distances.size:
        raise ValueError(f"k must be in [0, {distances.size}], got {k}")
    order = np.lexsort((np.arange(distances.size), -distances))
    return order[:k].tolist()
