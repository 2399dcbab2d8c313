"""Projection of query points onto the convex hull of a point set.

The program solved is

    min_alpha ||V.T @ alpha - q||^2   s.t.  alpha >= 0, sum(alpha) = 1,

with away-step Frank-Wolfe and exact line search, plus an occasional affine
correction on the active set. The Frank-Wolfe gap bounds the objective
suboptimality and serves as the stopping certificate.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lstsq

from ..types import (
    PointSet,
    ProjectionResult,
    SimplexCoefficients,
    SolverConfig,
    as_query,
)
from ._backend import get_kernel

log = logging.getLogger(__name__)

DEFAULT_CONFIG = SolverConfig()

# fewest Frank-Wolfe steps between two affine corrections
_MIN_CHUNK = 16
# cap on drop-and-resolve passes inside one correction
_MAX_MINOR = 16
_STALLED = 2


def _fw_gap(V, alpha, q):
    p = V.T @ alpha
    g = V @ (p - q)
    return p, 2.0 * (float(g @ alpha) - float(g.min()))


def _finish(points, q, alpha, iterations, tol, trace):
    coeffs = SimplexCoefficients.from_dense(alpha)
    V = points.data
    sub = V[coeffs.indices]
    projection = coeffs.weights @ sub
    resid = q - projection
    g = V @ (-resid)
    gap = 2.0 * (float(g[coeffs.indices] @ coeffs.weights) - float(g.min()))
    gap = max(gap, 0.0)
    return ProjectionResult(
        coefficients=coeffs,
        projection=projection,
        distance=float(np.sqrt(resid @ resid)),
        dual_gap=gap,
        iterations=int(iterations),
        converged=bool(gap <= tol),
        gap_tolerance=tol,
        trace=trace,
    )


def _objective(V, alpha, q):
    r = V.T @ alpha - q
    return float(r @ r)


def affine_correction(V, q, alpha) -> bool:
    """Move ``alpha`` to the best point of the affine hull of its support.

    Wolfe-style minor cycle: solve the affinely constrained least squares on
    the current support; if some weights come out non-positive, step to the
    simplex boundary along the segment, drop the vertex that hit zero and
    repeat, for at most ``_MAX_MINOR`` passes. Every pass moves along a
    segment towards a minimiser of the convex objective, so a truncated cycle
    still improves. Applied only when the objective strictly decreases.
    """
    a = alpha.copy()
    support = np.flatnonzero(a > 0)
    if support.size < 2:
        return False
    f0 = _objective(V, alpha, q)
    for _ in range(min(support.size, _MAX_MINOR)):
        support = np.flatnonzero(a > 0)
        if support.size == 1:
            break
        base = V[support[0]]
        B = (V[support[1:]] - base).T
        # pivoted QR is much cheaper than the SVD driver for wide supports
        w = lstsq(B, q - base, lapack_driver="gelsy", check_finite=False)[0]
        beta = np.concatenate(([1.0 - w.sum()], w))
        cur = a[support]
        neg = beta <= 0.0
        if not neg.any():
            a[support] = beta
            break
        ratios = cur[neg] / (cur[neg] - beta[neg])
        j = int(np.argmin(ratios))
        a[support] = cur + ratios[j] * (beta - cur)
        a[support[np.flatnonzero(neg)[j]]] = 0.0
        a[a < 0] = 0.0
    a /= a.sum()
    if _objective(V, a, q) < f0:
        alpha[:] = a
        return True
    return False


def project_to_hull(points: PointSet, query, config: Optional[SolverConfig] = None,
                    *, backend: Optional[str] = None) -> ProjectionResult:
    """Project ``query`` onto ``conv(points)``.

    Frank-Wolfe iterations run in chunks inside the kernel; between chunks an
    affine correction on the active set (see :func:`affine_correction`) is
    tried, which removes the slow tail on thin simplices. Each accepted
    correction counts as one iteration, each attempt uses one unit of budget. An exhausted budget yields ``converged=False``
    rather than an exception.
    """
    config = DEFAULT_CONFIG if config is None else config
    q = as_query(points, query)
    tol = config.tolerance_for(q)
    V = points.data
    n = points.n_points

    if n == 1:
        alpha = np.ones(1)
        trace = np.array([float((V[0] - q) @ (V[0] - q))]) if config.debug else None
        return _finish(points, q, alpha, 0, tol, trace)

    kernel = get_kernel(backend)
    exact = config.line_search == "exact"

    # start from the vertex nearest to q (lowest index on ties)
    start = int(np.argmin(points.row_norms_sq - 2.0 * (V @ q)))
    alpha = np.zeros(n)
    alpha[start] = 1.0
    p = V[start].copy()

    trace_parts = []
    if config.debug:
        r0 = p - q
        trace_parts.append(np.array([float(r0 @ r0)]))

    total = 0
    budget = config.max_iterations
    while budget > 0:
        chunk = budget if not exact else min(budget, max(_MIN_CHUNK, 2 * int(np.count_nonzero(alpha))))
        buf = np.empty(chunk) if config.debug else None
        iters, _gap, status = kernel(V, q, alpha, p, tol, chunk, exact, buf)
        total += iters
        budget -= iters
        if buf is not None:
            trace_parts.append(buf[:iters].copy())
        # renormalise and drop rounding residue before re-checking the gap
        alpha[alpha < 0] = 0.0
        alpha /= alpha.sum()
        p, gap = _fw_gap(V, alpha, q)
        if gap <= tol or budget <= 0 or not exact:
            break
        improved = affine_correction(V, q, alpha)
        budget -= 1
        if improved:
            total += 1
            p = V.T @ alpha
            if config.debug:
                r = p - q
                trace_parts.append(np.array([float(r @ r)]))
        elif status == _STALLED:
            break

    trace = np.concatenate(trace_parts) if config.debug else None
    res = _finish(points, q, alpha, total, tol, trace)
    if not res.converged:
        log.debug("projection stopped at gap %.3g > %.3g after %d iterations",
                  res.dual_gap, tol, total)
    return res


def membership(points: PointSet, query, tol: float,
               config: Optional[SolverConfig] = None, *, backend=None):
    """Return ``(inside, distance)`` with ``inside = distance <= tol``.

    The gap tolerance is tightened to ``tol**2 / 4`` so the distance estimate
    is accurate at the threshold scale.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    cfg = _membership_config(config, tol)
    res = project_to_hull(points, query, cfg, backend=backend)
    return res.distance <= tol, res.distance


def _membership_config(config, tol):
    config = DEFAULT_CONFIG if config is None else config
    tight = tol * tol / 4.0
    if config.gap_tolerance is not None and config.gap_tolerance < tight:
        return config
    return SolverConfig(gap_tolerance=tight, max_iterations=config.max_iterations,
                        tie_break=config.tie_break, line_search=config.line_search,
                        debug=config.debug, threads=config.threads)


def batch_project(points: PointSet, queries: Sequence, config: Optional[SolverConfig] = None,
                  *, threads: Optional[int] = None, backend=None) -> list:
    """Project each query independently; output order follows input order."""
    config = DEFAULT_CONFIG if config is None else config
    qs = [as_query(points, q, i) for i, q in enumerate(queries)]
    if not qs:
        return []
    workers = config.threads if threads is None else int(threads)
    if workers <= 1 or len(qs) == 1:
        return [project_to_hull(points, q, config, backend=backend) for q in qs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda q: project_to_hull(points, q, config, backend=backend), qs))


def distances(points: PointSet, queries: Sequence, config=None, *, threads=None) -> np.ndarray:
    return np.array([r.distance for r in batch_project(points, queries, config, threads=threads)])
