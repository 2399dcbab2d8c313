"""Exact hull projection by support-subset enumeration (small N only)."""

from itertools import combinations

import numpy as np

from ..types import PointSet, ProjectionResult, SimplexCoefficients, as_query

MAX_ORACLE_POINTS = 16


def _affine_lstsq(S, q):
    """Closest point to q on the affine hull of the rows of S, as barycentric weights."""
    if S.shape[0] == 1:
        return np.ones(1)
    base = S[0]
    B = (S[1:] - base).T
    w, *_ = np.linalg.lstsq(B, q - base, rcond=None)
    return np.concatenate(([1.0 - w.sum()], w))


def oracle_project(points: PointSet, query, feasibility_tol: float = 1e-12) -> ProjectionResult:
    """Globally optimal projection by trying every support subset.

    Each nonempty subset of at most ``d + 1`` points (larger subsets are
    affinely dependent, and some optimal support never needs them) is solved
    as an affinely constrained least-squares problem. Candidates with
    nonnegative barycentric weights are points of the hull; the closest one
    is the projection.
    """
    n = points.n_points
    if n > MAX_ORACLE_POINTS:
        raise ValueError(f"oracle_project is limited to N <= {MAX_ORACLE_POINTS}, got {n}")
    q = as_query(points, query)
    V = points.data
    best = None
    tried = 0
    for size in range(1, min(n, points.dim + 1) + 1):
        for subset in combinations(range(n), size):
            tried += 1
            idx = np.array(subset)
            w = _affine_lstsq(V[idx], q)
            if np.any(w < -feasibility_tol):
                continue
            w = np.clip(w, 0.0, None)
            w /= w.sum()
            proj = w @ V[idx]
            dist = float(np.linalg.norm(q - proj))
            if best is None or dist < best[0]:
                best = (dist, idx, w, proj)
    dist, idx, w, proj = best
    alpha = np.zeros(n)
    alpha[idx] = w
    g = V @ (proj - q)
    gap = max(2.0 * (float(g @ alpha) - float(g.min())), 0.0)
    return ProjectionResult(
        coefficients=SimplexCoefficients.from_dense(alpha),
        projection=proj,
        distance=dist,
        dual_gap=gap,
        iterations=tried,
        converged=True,
        gap_tolerance=float("nan"),
    )
