import numpy as np
import pytest
import scipy.sparse as sp

from hullscope.features import (
    FeatureMatrix,
    SimilarityGraph,
    build_feature_matrix,
    daubechies_filter,
    dwt2,
    idwt2,
    knn_graph,
    laplacian_scores,
    laplacian_select,
    rrqr_select,
)
from hullscope.features.wavelets import WaveletPyramid, analysis_matrix, highpass_from_lowpass

# published db2 / db4 decomposition low-pass taps
DB2 = [-0.12940952255092145, 0.22414386804185735, 0.836516303737469, 0.48296291314469025]
DB4 = [-0.010597401784997278, 0.032883011666982945, 0.030841381835986965,
       -0.18703481171888114, -0.02798376941698385, 0.6308807679295904,
       0.7148465705525415, 0.23037781330885523]


def test_filter_values_match_published_taps():
    np.testing.assert_allclose(daubechies_filter(2), DB2, atol=1e-12)
    np.testing.assert_allclose(daubechies_filter(4), DB4, atol=1e-12)
    np.testing.assert_allclose(daubechies_filter(1), [2 ** -0.5, 2 ** -0.5], atol=1e-15)


@pytest.mark.parametrize("order", range(1, 11))
def test_filter_orthonormality_and_moments(order):
    h = daubechies_filter(order)
    assert h.size == 2 * order
    assert h.sum() == pytest.approx(np.sqrt(2), abs=1e-13)
    for m in range(order):
        ac = h[: h.size - 2 * m] @ h[2 * m:]
        assert ac == pytest.approx(1.0 if m == 0 else 0.0, abs=1e-13)
    g = highpass_from_lowpass(h)
    k = np.arange(h.size)
    for mom in range(order):
        # vanishing moments of the high-pass filter (relative to its scale)
        assert abs(g @ k ** mom) <= 1e-9 * max(1.0, float(np.abs(k ** mom).max()))


@pytest.mark.parametrize("bad", [0, 11, 2.5, "db4"])
def test_unsupported_order(bad):
    with pytest.raises(ValueError):
        daubechies_filter(bad)
    with pytest.raises(ValueError):
        dwt2(np.zeros((8, 8)), bad, 1)


def test_analysis_matrix_orthogonal():
    for n in (2, 4, 6, 32):
        for order in (1, 3, 10):
            W = analysis_matrix(n, order)
            np.testing.assert_allclose(W @ W.T, np.eye(n), atol=1e-13)


@pytest.mark.parametrize("order", [1, 2, 4, 7])
def test_constant_image_has_no_detail(order):
    img = np.full((16, 16), 3.7)
    pyr = dwt2(img, order, 2)
    for bands in pyr.details:
        for b in bands:
            assert np.abs(b).max() <= 1e-12
    assert pyr.energy() == pytest.approx((img ** 2).sum(), rel=1e-12)
    assert np.sum(pyr.approx ** 2) == pytest.approx((img ** 2).sum(), rel=1e-12)


@pytest.mark.parametrize("order", [1, 2, 4, 10])
@pytest.mark.parametrize("levels", [1, 2, 3])
def test_roundtrip_and_parseval(rng, order, levels):
    img = rng.normal(size=(32, 32))
    pyr = dwt2(img, order, levels)
    assert np.abs(idwt2(pyr, order) - img).max() <= 1e-10
    assert pyr.energy() == pytest.approx((img ** 2).sum(), rel=1e-9)


def test_rectangular_and_stacked(rng):
    imgs = rng.normal(size=(3, 8, 16))
    pyr = dwt2(imgs, 2, 2)
    assert pyr.approx.shape == (3, 2, 4)
    np.testing.assert_allclose(idwt2(pyr, 2), imgs, atol=1e-12)
    single = dwt2(imgs[1], 2, 2)
    np.testing.assert_allclose(pyr.flatten()[1], single.flatten(), atol=1e-14)


def test_odd_shape_rejected():
    with pytest.raises(ValueError, match="divisible"):
        dwt2(np.zeros((6, 6)), 1, 2)
    with pytest.raises(ValueError):
        dwt2(np.zeros((7, 8)), 1, 1)


def test_idwt_zero_pyramid_and_impulse():
    z = WaveletPyramid.zeros_like_shape((16, 16), 2)
    assert np.all(idwt2(z, 3) == 0)
    z.details[-1][2][1, 2] = 1.0
    img = idwt2(z, 3)
    assert np.sum(img ** 2) == pytest.approx(1.0, rel=1e-12)
    # footprint of one HH atom is the outer product of two length-6 filters
    assert np.count_nonzero(np.abs(img) > 1e-14) <= 36


def test_idwt_level_mismatch():
    pyr = dwt2(np.zeros((8, 8)), 1, 2)
    with pytest.raises(ValueError):
        idwt2(pyr, 1, levels=3)


def test_build_feature_matrix(rng):
    imgs = [rng.uniform(size=(16, 16)) for _ in range(5)]
    fm = build_feature_matrix(imgs, 4, 2)
    assert fm.shape == (5, 256)
    assert fm.source["family"] == "db4"
    pyr = dwt2(imgs[2], 4, 2)
    expect = np.concatenate([pyr.approx.ravel()] + [b.ravel() for lev in pyr.details for b in lev])
    np.testing.assert_allclose(fm.data[2], expect, atol=1e-14)
    again = build_feature_matrix(imgs, 4, 2)
    assert fm.data.tobytes() == again.data.tobytes()
    zero = build_feature_matrix([np.zeros((8, 8))] * 3, 2, 1)
    assert not zero.data.any()
    with pytest.raises(ValueError):
        build_feature_matrix([np.zeros((8, 8)), np.zeros((8, 16))], 2, 1)


def test_feature_matrix_validation():
    with pytest.raises(ValueError):
        FeatureMatrix(np.array([[np.nan]]))
    with pytest.raises(ValueError):
        FeatureMatrix(np.zeros((2, 3)), selected_indices=(2, 1))
    fm = FeatureMatrix(np.arange(12.0).reshape(3, 4)).select([3, 0], {"kind": "manual"})
    assert fm.selected_indices == (0, 3)
    np.testing.assert_array_equal(fm.data[:, 1], [3.0, 7.0, 11.0])


def test_rrqr_orthonormal_columns(rng):
    Q, _ = np.linalg.qr(rng.normal(size=(20, 6)))
    assert set(rrqr_select(Q, 6)) == set(range(6))


def test_rrqr_hand_computed():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    b = np.array([0.5, -0.2, 0.1, 0.3])
    # norms: |2a| > |a| > |b|; after removing the 2a direction column a is zero
    assert rrqr_select(np.c_[a, 2 * a, b], 2) == [1, 2]


@pytest.mark.parametrize("r", [1, 3, 8])
def test_rrqr_span_residual(rng, r):
    A = rng.normal(size=(50, r)) @ rng.normal(size=(r, 64))
    cols = rrqr_select(A, r)
    C = A[:, cols]
    X, *_ = np.linalg.lstsq(C, A, rcond=None)
    assert np.linalg.norm(A - C @ X) <= 1e-8 * np.linalg.norm(A)


def test_rrqr_bad_k():
    with pytest.raises(ValueError):
        rrqr_select(np.zeros((3, 2)), 3)


def brute_knn(X, k):
    n = len(X)
    out = []
    for i in range(n):
        d = [(float(np.sum((X[i] - X[j]) ** 2)), j) for j in range(n) if j != i]
        d.sort()
        out.append([j for _, j in d[:k]])
    return out


def test_knn_graph_matches_brute_force(rng):
    X = rng.normal(size=(100, 4))
    g = knn_graph(X, 5, bandwidth=2.0)
    expect = set()
    for i, nb in enumerate(brute_knn(X, 5)):
        for j in nb:
            expect.add((min(i, j), max(i, j)))
    got = {(i, j) for i, j, _ in g.edges() if i < j}
    assert got == expect
    for i, j, w in g.edges():
        assert w == pytest.approx(np.exp(-np.sum((X[i] - X[j]) ** 2) / 2.0), rel=1e-12)


def test_knn_graph_properties(rng):
    X = np.vstack([rng.normal(size=(20, 3)), rng.normal(size=(20, 3)) + 100])
    g = knn_graph(X, 1)
    W = g.weights
    assert (W != W.T).nnz == 0
    assert W.diagonal().sum() == 0
    assert all(0 < w <= 1 for _, _, w in g.edges())
    for i, j, _ in g.edges():
        assert (i < 20) == (j < 20)
    deg = np.diff(W.indptr)
    assert deg.min() >= 1
    with pytest.raises(ValueError):
        knn_graph(X, 40)


def test_knn_weights_decrease_with_distance(rng):
    X = rng.normal(size=(60, 3))
    g = knn_graph(X, 4)
    e = g.edges()
    d = np.array([np.sum((X[i] - X[j]) ** 2) for i, j, _ in e])
    w = np.array([w for *_, w in e])
    order = np.argsort(d)
    assert np.all(np.diff(w[order]) <= 0)


def test_knn_tie_break_lower_index():
    X = np.array([[0.0], [1.0], [-1.0], [5.0]])
    g = knn_graph(X, 1)
    # node 0 is equidistant from 1 and 2 and must pick 1
    assert (0, 1) in {(i, j) for i, j, _ in g.edges()}
    assert (0, 2) not in {(i, j) for i, j, _ in g.edges()} or 2 in g.neighbors(0)


def six_node_graph():
    # path 0-1-2-3-4-5 with unit weights
    rows = [0, 1, 1, 2, 2, 3, 3, 4, 4, 5]
    cols = [1, 0, 2, 1, 3, 2, 4, 3, 5, 4]
    W = sp.csr_matrix((np.ones(10), (rows, cols)), shape=(6, 6))
    return SimilarityGraph(W, knn=1, bandwidth=1.0)


def test_laplacian_six_node_by_hand():
    g = six_node_graph()
    smooth = np.arange(6.0)
    rough = np.array([0.0, 5.0, 0.0, 5.0, 0.0, 5.0])
    s = laplacian_scores(np.c_[smooth, rough], g)
    # degrees d = [1,2,2,2,2,1], sum 10; weighted mean of smooth = 25/10
    d = np.array([1, 2, 2, 2, 2, 1.0])
    ft = smooth - 2.5
    expect_smooth = 5.0 / float(d @ ft ** 2)  # five unit edges, each difference 1
    ft2 = rough - (d @ rough) / 10
    expect_rough = 5 * 25.0 / float(d @ ft2 ** 2)
    assert s[0] == pytest.approx(expect_smooth, rel=1e-12)
    assert s[1] == pytest.approx(expect_rough, rel=1e-12)
    assert s[0] < s[1]


def test_laplacian_constant_and_invariance(rng):
    F = rng.normal(size=(40, 5))
    F[:, 3] = 2.0
    g = knn_graph(F, 4)
    s = laplacian_scores(F, g)
    assert s[3] == np.inf
    G = F * np.array([3.0, -0.5, 7.0, 1.0, 1e-3]) + np.array([100.0, -4.0, 0.5, 9.0, 2.0])
    s2 = laplacian_scores(G, g)
    np.testing.assert_allclose(s2[[0, 1, 2, 4]], s[[0, 1, 2, 4]], rtol=1e-9)
    assert s2[3] == np.inf
    sel = laplacian_select(F, 2, graph=g)
    assert 3 not in sel and sel == list(np.argsort(s, kind="stable")[:2])


def test_laplacian_errors():
    empty = SimilarityGraph(sp.csr_matrix((3, 3)), knn=1, bandwidth=1.0)
    with pytest.raises(ValueError):
        laplacian_scores(np.zeros((3, 2)), empty)
    with pytest.raises(ValueError):
        laplacian_scores(np.zeros((4, 2)), six_node_graph())
