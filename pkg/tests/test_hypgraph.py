"""Levelled graphs, hyperbolicity estimates, and the boundary map."""

import numpy as np
import pytest

from smalekit import hypgraph, linear
from smalekit.errors import InvalidPath, Oversize
from oracles import gromov_delta_exact

CAT = np.array([[2, 1], [1, 1]])


@pytest.fixture(scope="module")
def cat_data():
    return hypgraph.GroupData(dim=2, phi=CAT, gen_radius=2, tube_radius=1.5)


def test_single_vertex_graph():
    data = hypgraph.GroupData(dim=2, phi=CAT, gen_radius=1, tube_radius=1.5)
    graph = hypgraph.build_xi(data, levels_n=0, rho=0)
    assert graph.n_vertices == 1
    assert graph.adjacency.nnz == 0


def test_single_level_graph_is_sup_norm_adjacency_on_tube():
    data = hypgraph.GroupData(dim=2, phi=CAT, gen_radius=1, tube_radius=1.5)
    graph = hypgraph.build_xi(data, levels_n=0, rho=2)
    pts = graph.points
    adj = graph.adjacency.toarray()
    for i in range(len(pts)):
        for j in range(len(pts)):
            expected = (i != j) and np.max(np.abs(pts[i] - pts[j])) <= 1
            assert bool(adj[i, j]) == expected


def test_vertical_edges_from_origin(cat_data):
    graph = hypgraph.build_xi(cat_data, levels_n=2, rho=6)
    origin = graph.vertex_id(np.zeros(2, dtype=int), 0)
    neighbors = graph.adjacency[origin].indices
    for v in neighbors:
        g, level = graph.vertex_label(v)
        if level == 1:
            phi_g = cat_data.phi @ g
            assert np.max(np.abs(phi_g)) <= cat_data.gen_radius
    # and conversely: every tube point with phi(g) in S is a neighbor
    for pi, g in enumerate(graph.points):
        if np.max(np.abs(cat_data.phi @ g)) <= cat_data.gen_radius:
            vid = graph.vertex_id(g, 1)
            assert vid in set(neighbors)


def test_level_shift_is_automorphism_on_interior(cat_data):
    graph = hypgraph.build_xi(cat_data, levels_n=3, rho=8)
    t = graph.n_tube_points
    adj = graph.adjacency
    levels = graph.levels
    for li in range(len(levels) - 2):
        base = li * t
        up = (li + 1) * t
        block_a = adj[base : base + t, base : base + t]
        block_b = adj[up : up + t, up : up + t]
        assert (block_a != block_b).nnz == 0
        if li + 2 < len(levels):
            vert_a = adj[base : base + t, up : up + t]
            vert_b = adj[up : up + t, up + t : up + 2 * t]
            assert (vert_a != vert_b).nnz == 0


def test_oversize_guard():
    data = hypgraph.GroupData(dim=2, phi=CAT, gen_radius=1, tube_radius=200.0)
    with pytest.raises(Oversize):
        hypgraph.build_xi(data, levels_n=600, rho=600)


def test_tree_has_zero_delta():
    # a path graph is 0-hyperbolic: degenerate tube with one row of points
    import scipy.sparse as sp

    n = 60
    rows = list(range(n - 1)) + list(range(1, n))
    cols = list(range(1, n)) + list(range(n - 1))
    adj = sp.csr_matrix((np.ones(len(rows), bool), (rows, cols)), shape=(n, n))
    pts = np.stack([np.arange(n), np.zeros(n, int)], axis=1)
    graph = hypgraph.LevelledGraph(points=pts.astype(np.int64), levels=[0],
                                   adjacency=adj, data=None,
                                   truncation=(0, n)).finalize()
    est = hypgraph.delta_hyperbolicity(graph, n_quadruples=2000, seed=1)
    assert est.delta == 0.0


def test_delta_estimate_close_to_exhaustive_on_small_graph():
    import scipy.sparse.csgraph as csg

    data = hypgraph.GroupData(dim=2, phi=CAT, gen_radius=1, tube_radius=1.2)
    graph = hypgraph.build_xi(data, levels_n=1, rho=2)
    assert graph.n_vertices <= 60
    dist = csg.dijkstra(graph.adjacency, unweighted=True)
    keep = np.flatnonzero(np.isfinite(dist).all(axis=1))
    exact = gromov_delta_exact(dist[np.ix_(keep, keep)])
    est = hypgraph.delta_hyperbolicity(graph, n_quadruples=60000, seed=0,
                                       pool_size=graph.n_vertices)
    assert est.delta <= exact + 1e-9
    assert est.delta >= exact - 1.0


def test_delta_stable_under_tube_thickening():
    a = hypgraph.GroupData(dim=2, phi=CAT, gen_radius=2, tube_radius=1.5)
    b = hypgraph.GroupData(dim=2, phi=CAT, gen_radius=2, tube_radius=3.0)
    est_a = hypgraph.delta_hyperbolicity(
        hypgraph.build_xi(a, levels_n=5, rho=25), n_quadruples=4000, seed=2
    )
    est_b = hypgraph.delta_hyperbolicity(
        hypgraph.build_xi(b, levels_n=5, rho=25), n_quadruples=4000, seed=2
    )
    assert abs(est_a.delta - est_b.delta) <= 4.0


def test_flat_control_delta_grows_with_width():
    deltas = []
    for rho in (8, 16, 24):
        graph = hypgraph.build_flat_control(rho=rho, width=rho // 2)
        est = hypgraph.delta_hyperbolicity(graph, n_quadruples=4000, seed=3)
        deltas.append(est.delta)
    assert deltas[-1] > deltas[0]
    slope = np.polyfit([8, 16, 24], deltas, 1)[0]
    assert slope > 0.05


def test_descending_paths_merge(cat_data):
    graph = hypgraph.build_xi(cat_data, levels_n=5, rho=25)
    out = hypgraph.descending_merge(graph, n_pairs=12, seed=4)
    assert out["merged"]
    assert out["depth_required"] <= 5


# ---------------------------------------------------------------------------
# boundary map


def test_zero_path_maps_to_origin(cat_data):
    path = [np.zeros(2, dtype=int)] * 10
    out = hypgraph.boundary_point(cat_data, path, 9)
    assert np.allclose(out, 0.0)


def test_invalid_path_rejected(cat_data):
    path = [np.zeros(2, dtype=int), np.array([7, 9])]
    with pytest.raises(InvalidPath):
        hypgraph.boundary_point(cat_data, path, 1)


def test_paths_agreeing_early_stay_close(cat_data):
    split = cat_data.split
    rng = np.random.default_rng(6)
    u = split.e_plus_basis[:, 0]
    t1 = 0.31 * u
    exp1 = linear.digit_expand(split, t1, s_rad=2, n=30)
    # second expansion: same digits up to index 10, then re-expand the tail
    exp2 = linear.digit_expand(split, t1 + 1e-5 * u, s_rad=2, n=30)
    assert all(
        np.array_equal(a, b) for a, b in zip(exp1.digits[:8], exp2.digits[:8])
    )
    p1 = hypgraph.path_from_expansion(cat_data, exp1)
    p2 = hypgraph.path_from_expansion(cat_data, exp2)
    b1 = hypgraph.boundary_point(cat_data, p1, 25)
    b2 = hypgraph.boundary_point(cat_data, p2, 25)
    lam = split.lambda_max
    assert np.linalg.norm(b1 - b2) <= 2e-5 + 4 * lam**25


def test_boundary_recovers_expansion_targets(cat_data):
    split = cat_data.split
    rng = np.random.default_rng(9)
    for _ in range(50):
        target = float(rng.uniform(-0.45, 0.45)) * split.e_plus_basis[:, 0]
        exp = linear.digit_expand(split, target, s_rad=2, n=40)
        path = hypgraph.path_from_expansion(cat_data, exp)
        out = hypgraph.boundary_point(cat_data, path, 40)
        assert np.linalg.norm(out - target) < 1e-6


def test_path_vertices_satisfy_edge_rule(cat_data):
    split = cat_data.split
    target = 0.2 * split.e_plus_basis[:, 0]
    exp = linear.digit_expand(split, target, s_rad=2, n=20)
    path = hypgraph.path_from_expansion(cat_data, exp)
    for i in range(len(path) - 1):
        step = np.array(hypgraph._apply_int(cat_data.phi, path[i + 1])) - np.array(
            path[i]
        )
        assert np.max(np.abs(step)) <= cat_data.gen_radius
