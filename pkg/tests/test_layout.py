import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist

from orgmod import InputError
from orgmod.annealing import AnnealConfig, AnnealTrail, Snapshot, anneal
from orgmod.datasets import load_karate
from orgmod.graph import Clustering, build_graph, induced_graph
from orgmod.layout import (
    Layout,
    collapse_positions,
    expected_positions,
    fr_refine,
    fuzzy_frames,
    grid_layout,
)
from orgmod.prior import build_grid, custom_prior, grid_prior, identity_prior
from orgmod.quality import count_crossings


def _square_prior(lam=0.1):
    s = np.full((4, 4), lam)
    np.fill_diagonal(s, 1.0)
    s[0, 3] = s[3, 0] = s[1, 2] = s[2, 1] = 0.0
    return custom_prior(build_grid(2, 2), s)


def test_grid_layout_chain():
    # path 0-1-2-3 mapped on the square's perimeter
    g = build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    prior = grid_prior(2, 2, "linear", 1.0)
    cl = Clustering([0, 1, 3, 2], 4)
    lay = grid_layout(cl, prior, induced_graph(g, cl))
    assert len(lay.edges) == 3
    assert count_crossings(lay.points, lay.edges) == 0


def test_grid_layout_single_cluster_and_rejection():
    g = build_graph([(0, 1, 1), (1, 2, 1)])
    prior = grid_prior(2, 2)
    cl = Clustering([3, 3, 3], 4)
    lay = grid_layout(cl, prior, induced_graph(g, cl))
    assert len(lay.points) == 1 and len(lay.edges) == 0
    np.testing.assert_array_equal(lay.points, [[1, 1]])
    with pytest.raises(InputError):
        cl2 = Clustering([0, 0, 1], 2)
        grid_layout(cl2, identity_prior(2), induced_graph(g, cl2))


def test_karate_grid_layout():
    g = load_karate()
    prior = _square_prior(0.05)
    best = max((anneal(g, prior, AnnealConfig(outer_steps=151, seed=s)) for s in range(5)),
               key=lambda r: r.clustering.nonempty_clusters())
    lay = grid_layout(best.clustering, prior, induced_graph(g, best.clustering))
    assert len(lay.points) == 4
    np.testing.assert_array_equal(np.sort(lay.points, axis=0), np.sort(build_grid(2, 2), axis=0))
    # one cluster is linked to only one other cluster
    degree = np.bincount(lay.edges.ravel(), minlength=4)
    assert degree.min() == 1
    assert len(lay.edges) == 4
    assert count_crossings(lay.points, lay.edges) == 0


def test_expected_positions_examples():
    prior = grid_prior(2, 2)
    np.testing.assert_allclose(expected_positions(np.full((3, 4), 0.25), prior), 0.5)
    np.testing.assert_array_equal(expected_positions(np.eye(4), prior), prior.positions)
    np.testing.assert_allclose(expected_positions([[0.5, 0.5, 0, 0]], prior), [[0, 0.5]])
    with pytest.raises(InputError):
        expected_positions(np.full((3, 3), 1 / 3), prior)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 4))
def test_expected_positions_in_hull(seed, rows, cols):
    rng = np.random.default_rng(seed)
    prior = grid_prior(rows, cols)
    p = expected_positions(rng.dirichlet(np.ones(prior.c), size=20), prior)
    assert np.all(p >= -1e-12) and np.all(p[:, 0] <= rows - 1 + 1e-12)
    assert np.all(p[:, 1] <= cols - 1 + 1e-12)


def test_collapse_examples():
    m, c = collapse_positions([[0, 0], [0.01, 0]], 0.05)
    assert list(m) == [0, 0]
    np.testing.assert_allclose(c, [[0.005, 0]])
    m, c = collapse_positions([[0, 0], [1, 0]], 0.05)
    assert list(m) == [0, 1]
    m, _ = collapse_positions([[0, 0], [0.6, 0], [1.2, 0]], 1.0)
    assert list(m) == [0, 0, 1]
    m, c = collapse_positions(np.zeros((0, 2)), 0.1)
    assert len(m) == 0 and len(c) == 0
    with pytest.raises(InputError):
        collapse_positions([[0, 0]], 0.0)


def _scipy_complete_linkage_groups(pts, cut):
    from scipy.cluster.hierarchy import fcluster, linkage

    if len(pts) == 1:
        return 1
    return len(set(fcluster(linkage(pts, "complete"), cut, criterion="distance")))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.floats(0.01, 0.5))
def test_collapse_properties(seed, n, cut):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    m, c = collapse_positions(pts, cut)
    assert len(c) <= n
    for g in range(len(c)):
        members = pts[m == g]
        if len(members) > 1:
            assert pdist(members).max() <= cut + 1e-12
        np.testing.assert_allclose(c[g], members.mean(axis=0))
    # generic positions: no ties, so the grouping agrees with scipy's dendrogram cut
    assert len(c) == _scipy_complete_linkage_groups(pts, cut)


def test_fr_refine_examples():
    lay = Layout([[0, 0], [0, 0], [1, 1]], [1, 2, 3], np.zeros((0, 2)), [])
    assert fr_refine(lay, 0) is lay
    out = fr_refine(lay, 20)
    assert np.linalg.norm(out.points[0] - out.points[1]) > 0
    assert np.all(np.isfinite(out.points))
    sym = Layout([[-1, 0], [1, 0], [0, 0.5], [0, -0.5]], [1] * 4, [[0, 2], [1, 2], [2, 3]], [1, 1, 1])
    pts = fr_refine(sym, 20).points
    mirrored = pts * [-1, 1]
    np.testing.assert_allclose(mirrored[[1, 0, 2, 3]], pts, atol=1e-9)


def test_fuzzy_frames_karate():
    g = load_karate()
    prior = grid_prior(2, 2, "exponential", 1.0)
    res = anneal(g, prior, AnnealConfig(outer_steps=34, seed=0))
    frames = fuzzy_frames(g, res.trail, prior)
    assert len(frames) == len(res.trail)
    np.testing.assert_array_equal([f.temperature for f in frames], res.trail.temperatures)
    first = frames[0]
    assert first.n_groups == 1
    np.testing.assert_allclose(first.centroids[0], [0.5, 0.5], atol=1e-2)
    last = frames[-1]
    d = np.sqrt(((last.centroids[:, None] - prior.positions[None]) ** 2).sum(-1)).min(axis=1)
    # a few boundary vertices stay ambivalent; the bulk sits on grid nodes
    near = last.layout.sizes[d < 0.1].sum()
    assert near >= 0.75 * g.n
    for f in frames:
        assert sorted(np.unique(f.membership)) == list(range(f.n_groups))
        assert f.layout.sizes.sum() == g.n


def test_fuzzy_frames_hard_snapshot_matches_grid():
    g = build_graph([(0, 1, 1), (1, 2, 1), (2, 3, 1)])
    prior = grid_prior(2, 2, "linear", 1.0)
    cl = Clustering([0, 1, 3, 2], 4)
    trail = AnnealTrail([Snapshot(1.0, cl.to_matrix(), 0.0, 1)])
    (frame,) = fuzzy_frames(g, trail, prior, fr_iterations=0)
    grid = grid_layout(cl, prior, induced_graph(g, cl))
    np.testing.assert_array_equal(np.sort(frame.layout.points, axis=0), np.sort(grid.points, axis=0))
    assert len(frame.layout.edges) == len(grid.edges)


def test_fuzzy_frames_skip_missing():
    g = build_graph([(0, 1, 1)])
    prior = grid_prior(1, 2)
    trail = AnnealTrail([Snapshot(2.0, None, 0.0, 1), Snapshot(1.0, np.eye(2), 0.0, 1)])
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        frames = fuzzy_frames(g, trail, prior)
    assert len(frames) == 1 and w
