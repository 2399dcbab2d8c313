"""Feature matrices and unsupervised column selection."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .wavelets import dwt2


@dataclass(frozen=True)
class FeatureMatrix:
    """N x m features plus a record of how they were produced."""

    data: np.ndarray
    source: dict = field(default_factory=lambda: {"kind": "external"})
    selection: dict = field(default_factory=lambda: {"kind": "none"})
    selected_indices: Optional[tuple] = None

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"feature data must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature matrix has non-finite entries")
        object.__setattr__(self, "data", arr)
        if self.selected_indices is not None:
            idx = tuple(int(i) for i in self.selected_indices)
            if list(idx) != sorted(set(idx)):
                raise ValueError("selected_indices must be unique and sorted")
            object.__setattr__(self, "selected_indices", idx)

    @property
    def shape(self):
        return self.data.shape

    def provenance(self) -> dict:
        return {
            "source": self.source,
            "selection": self.selection,
            "selected_indices": None if self.selected_indices is None else list(self.selected_indices),
            "shape": list(self.data.shape),
        }

    def select(self, indices, selection: dict) -> "FeatureMatrix":
        idx = sorted(int(i) for i in indices)
        if idx and (idx[0] < 0 or idx[-1] >= self.data.shape[1]):
            raise ValueError("selected index out of range")
        return replace(self, data=self.data[:, idx], selection=selection, selected_indices=tuple(idx))


def build_feature_matrix(images: Sequence, order: int = 4, levels: int = 2) -> FeatureMatrix:
    """One row per image: its flattened wavelet pyramid.

    Row layout is approximation first, then ``LH, HL, HH`` for each level from
    coarsest to finest, each band raveled in C order.
    """
    if len(images) == 0:
        raise ValueError("no images given")
    shapes = {np.shape(im) for im in images}
    if len(shapes) != 1:
        raise ValueError(f"images have heterogeneous shapes: {sorted(shapes)}")
    stack = np.asarray(images, dtype=np.float64)
    if stack.ndim != 3:
        raise ValueError("expected a sequence of 2-D images")
    rows = dwt2(stack, order, levels).flatten()
    return FeatureMatrix(rows, source={"kind": "wavelet", "family": f"db{order}", "order": order,
                                       "levels": levels, "image_shape": list(stack.shape[1:])})


def rrqr_select(features, k: int) -> list:
    """First ``k`` pivots of a column-pivoted QR, in pivot order."""
    A = features.data if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    m = A.shape[1]
    if not 1 <= k <= m:
        raise ValueError(f"k must be in [1, {m}], got {k}")
    _, piv = scipy.linalg.qr(A, mode="r", pivoting=True)
    return [int(i) for i in piv[:k]]


@dataclass
class SimilarityGraph:
    """Symmetric weighted kNN graph stored as a sparse matrix without self-loops."""

    weights: sp.csr_matrix
    knn: int
    bandwidth: float

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    def edges(self) -> list:
        coo = self.weights.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[t]), int(coo.col[t]), float(coo.data[t])) for t in order]

    def neighbors(self, i: int) -> np.ndarray:
        row = self.weights.getrow(i)
        return np.sort(row.indices)


def _knn_indices(X, k, block=1024):
    n = X.shape[0]
    nbrs = np.empty((n, k), dtype=np.int64)
    d2 = np.empty((n, k))
    for a in range(0, n, block):
        D = cdist(X[a:a + block], X, "sqeuclidean")
        rows = np.arange(D.shape[0])
        D[rows, rows + a] = np.inf
        # stable sort keeps lower indices first among equal distances
        order = np.argsort(D, axis=1, kind="stable")[:, :k]
        nbrs[a:a + block] = order
        d2[a:a + block] = np.take_along_axis(D, order, axis=1)
    return nbrs, d2


def knn_graph(features, k: int = 5, bandwidth: Optional[float] = None) -> SimilarityGraph:
    """Union-symmetrised kNN graph with heat-kernel weights ``exp(-||xi-xj||^2 / bandwidth)``.

    ``bandwidth=None`` uses the median squared kNN distance. Weights are
    floored at the smallest normal float so that far edges stay positive.
    """
    X = features.data if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    n = X.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < N = {n}, got {k}")
    nbrs, d2 = _knn_indices(X, k)
    if bandwidth is None:
        bandwidth = float(np.median(d2))
        if not bandwidth > 0:
            bandwidth = 1.0
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    rows = np.repeat(np.arange(n), k)
    cols = nbrs.ravel()
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    i, j = pairs[:, 0], pairs[:, 1]
    diff = X[i] - X[j]
    w = np.exp(-(diff * diff).sum(axis=1) / bandwidth)
    w = np.maximum(w, np.finfo(np.float64).tiny)
    W = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
                      shape=(n, n)).tocsr()
    return SimilarityGraph(weights=W, knn=k, bandwidth=float(bandwidth))


def laplacian_scores(features, graph: SimilarityGraph) -> np.ndarray:
    """Laplacian score per column; lower means the feature better respects the graph.

    Constant columns get ``+inf``.
    """
    F = features.data if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    if graph.n_nodes != F.shape[0]:
        raise ValueError(f"graph has {graph.n_nodes} nodes but features have {F.shape[0]} rows")
    W = graph.weights
    if W.nnz == 0:
        raise ValueError("similarity graph has no edges")
    deg = np.asarray(W.sum(axis=1)).ravel()
    Ft = F - (deg @ F) / deg.sum()
    DF = deg[:, None] * Ft
    denom = np.einsum("ij,ij->j", Ft, DF)
    # f'Lf as a sum over edges avoids the D - W cancellation
    coo = W.tocoo()
    dF = Ft[coo.row] - Ft[coo.col]
    num = 0.5 * (coo.data @ (dF * dF))
    scores = np.full(F.shape[1], np.inf)
    const = np.ptp(F, axis=0) == 0
    ok = ~const & (denom > 0)
    scores[ok] = num[ok] / denom[ok]
    return scores


def laplacian_select(features, k: int, graph: Optional[SimilarityGraph] = None,
                     knn: int = 5, bandwidth: Optional[float] = None) -> list:
    """Indices of the ``k`` lowest Laplacian scores (lower index first on ties)."""
    F = features.data if isinstance(features, FeatureMatrix) else np.asarray(features, float)
    if not 1 <= k <= F.shape[1]:
        raise ValueError(f"k must be in [1, {F.shape[1]}], got {k}")
    if graph is None:
        graph = knn_graph(F, knn, bandwidth)
    scores = laplacian_scores(F, graph)
    return np.argsort(scores, kind="stable")[:k].tolist()
