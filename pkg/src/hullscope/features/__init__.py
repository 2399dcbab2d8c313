from .selection import (
    FeatureMatrix,
    SimilarityGraph,
    build_feature_matrix,
    knn_graph,
    laplacian_scores,
    laplacian_select,
    rrqr_select,
)
from .wavelets import WaveletPyramid, daubechies_filter, dwt2, idwt2

__all__ = [
    "FeatureMatrix",
    "SimilarityGraph",
    "WaveletPyramid",
    "build_feature_matrix",
    "daubechies_filter",
    "dwt2",
    "idwt2",
    "knn_graph",
    "laplacian_scores",
    "laplacian_select",
    "rrqr_select",
]
