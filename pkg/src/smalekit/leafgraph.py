"""Leaf graphs over finite samples: threshold graphs from log-scale
readings, rectangle-cover graphs, BFS distances, and connectivity
diagnostics.

Large one-dimensional torus rays take an interval fast path: when the
log-scale is monotone in leaf separation (true for eigen-direction rays
with eps0 * expansion < 1/2), consecutive-gap adjacency determines
connectivity and greedy jumps give exact chain counts.  The fast path is
cross-checked against BFS in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from . import logscale, models
from ._kernels import ell_pairs as _kernel_pairs
from .errors import CoverTooCoarse, ValidationError

_BFS_CUTOFF = 3000
_SIDE_CODE = {"stable": 1, "unstable": -1}


@dataclass
class LeafGraph:
    """Graph over a leaf sample; adjacency is a symmetric boolean CSR."""

    sample: models.LeafSample
    n: int
    adjacency: sp.csr_matrix = field(repr=False)
    kind: str = "gamma"
    cover_scale: float = None

    @property
    def n_vertices(self):
        return self.adjacency.shape[0]

    @property
    def n_edges(self):
        return self.adjacency.nnz // 2


def build_gamma(sample, ell: logscale.EllMatrix, n: int) -> LeafGraph:
    """Threshold graph: edge iff the log-scale reading is at least n.

    Readings are capped at the truncation horizon, so n = n_max + 1
    yields an edgeless graph.
    """
    vals = ell.values
    if n > ell.n_max:
        adj = sp.csr_matrix((len(sample), len(sample)), dtype=bool)
    else:
        mask = (vals >= n) & ~ell.invalid
        np.fill_diagonal(mask, False)
        adj = sp.csr_matrix(mask)
    return LeafGraph(sample=sample, n=n, adjacency=adj, kind="gamma")


def graph_distance(graph: LeafGraph, i: int, j: int):
    """BFS shortest-path length; math.inf across components."""
    if not (0 <= i < graph.n_vertices and 0 <= j < graph.n_vertices):
        raise ValidationError("vertex index out of range")
    if i == j:
        return 0
    dist = csgraph.dijkstra(graph.adjacency, unweighted=True, indices=i)
    d = dist[j]
    return math.inf if np.isinf(d) else int(d)


def distances_from(graph: LeafGraph, sources):
    """(len(sources), N) matrix of BFS distances (inf across components)."""
    return csgraph.dijkstra(graph.adjacency, unweighted=True, indices=list(sources))


def build_gamma_prime(system, sample, cover_scale: float, n: int) -> LeafGraph:
    """Rectangle-cover graph: edge iff both points lie in the n-th image
    of one plaque of one cover element (grid cells on the torus, cylinder
    sets on a shift)."""
    if system.kind == "torus":
        if cover_scale > system.bracket_radius:
            raise CoverTooCoarse(
                f"cover scale {cover_scale} exceeds bracket radius "
                f"{system.bracket_radius}"
            )
        cells = int(round(1.0 / cover_scale))
        r = 1.0 / cells
        if sample.offsets is None:
            raise ValidationError("torus cover graphs need leaf offsets")
        power = n if sample.side == "stable" else -n
        anchor = models.iterate(system, sample.base_point, -power)
        m = np.linalg.matrix_power(
            (system.matrix_inv if power >= 0 else system.matrix).astype(float),
            abs(power),
        )
        pos = anchor[None, :] + sample.offsets @ m.T
        # the cover interleaves 2^d half-offset grids, so any pair with
        # per-coordinate extent below r/2 shares a cell of some grid (a
        # single grid is a partition, not a covering by open rectangles)
        adj = None
        d = pos.shape[1]
        for bits in range(2**d):
            shift = np.array([(bits >> c) & 1 for c in range(d)]) * (r / 2.0)
            keys = np.floor((pos - shift) / r + 1e-12).astype(np.int64)
            grid_adj = _clique_adjacency(keys)
            adj = grid_adj if adj is None else (adj + grid_adj).astype(bool)
        return LeafGraph(sample, n, sp.csr_matrix(adj), kind="gamma_prime",
                         cover_scale=r)

    pts = sample.points
    lo = min(p.core_span()[0] for p in pts)
    hi = max(p.core_span()[1] for p in pts)
    words = np.array([p.window(lo, hi) for p in pts], dtype=np.int16)
    positions = np.arange(lo, hi + 1)
    if sample.side == "stable":
        keep = positions >= -n - 1
    else:
        keep = positions <= n + 1
    keys = words[:, keep]
    adj = _clique_adjacency(keys)
    return LeafGraph(sample, n, adj, kind="gamma_prime", cover_scale=None)


def _clique_adjacency(keys):
    """Boolean CSR joining rows with identical key vectors."""
    n = keys.shape[0]
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    order = np.argsort(inverse, kind="stable")
    rows, cols = [], []
    start = 0
    sorted_inv = inverse[order]
    for stop in range(1, n + 1):
        if stop == n or sorted_inv[stop] != sorted_inv[start]:
            group = order[start:stop]
            if len(group) > 1:
                a, b = np.meshgrid(group, group, indexing="ij")
                off = a != b
                rows.append(a[off])
                cols.append(b[off])
            start = stop
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.ones(len(rows), dtype=bool)
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n), dtype=bool)
    return sp.csr_matrix((n, n), dtype=bool)


@dataclass
class ConnectivityReport:
    """Per-level connectivity of threshold graphs over a standard sample."""

    entries: list
    sample_size: int
    method: str

    def entry(self, n):
        for e in self.entries:
            if e["n"] == n:
                return e
        raise KeyError(n)


def connectivity_report(
    system,
    side: str,
    config: logscale.LogScaleConfig,
    n_range,
    window: float = None,
    spacing: float = None,
    depth: int = 3,
    base=None,
    sample=None,
) -> ConnectivityReport:
    """Connectivity, component count, and diameter of the threshold
    graphs over a standard sample, for each n in n_range."""
    if base is None:
        base = models.default_base(system)
    if sample is None:
        if system.kind == "torus":
            if window is None or spacing is None:
                raise ValidationError("torus connectivity needs window and spacing")
            sample = models.leaf_sample(system, base, side, window=window,
                                        spacing=spacing)
        else:
            sample = models.leaf_sample(system, base, side, depth=depth)

    n_range = list(n_range)
    if (
        system.kind == "torus"
        and sample.kind == "ray"
        and len(sample) > _BFS_CUTOFF
    ):
        return _interval_report(system, sample, config, n_range)

    ell = logscale.ell_matrix(system, sample, side, config)
    entries = []
    for n in n_range:
        graph = build_gamma(sample, ell, n)
        ncomp, labels = csgraph.connected_components(graph.adjacency, directed=False)
        connected = ncomp == 1
        if not connected:
            diameter = math.inf
        elif len(sample) == 1:
            diameter = 0
        else:
            diameter = _diameter(graph)
        entries.append(
            {"n": n, "connected": bool(connected), "components": int(ncomp),
             "diameter": diameter}
        )
    return ConnectivityReport(entries, len(sample), method="bfs")


def _diameter(graph):
    # double BFS sweep; exact for interval-like graphs, a lower bound in
    # general (sample sizes on the BFS path are small enough not to care)
    d0 = csgraph.dijkstra(graph.adjacency, unweighted=True, indices=0)
    far = int(np.argmax(np.where(np.isinf(d0), -1, d0)))
    d1 = csgraph.dijkstra(graph.adjacency, unweighted=True, indices=far)
    finite = d1[~np.isinf(d1)]
    return int(finite.max()) if len(finite) else math.inf


def _interval_report(system, sample, config, n_range):
    side = _SIDE_CODE[sample.side]
    n_eff = logscale.effective_horizon(system, config, sample.side)
    pts = sample.coords()
    n_pts = len(sample)
    idx = np.arange(n_pts - 1, dtype=np.intp)
    cons = _kernel_pairs(pts, system.matrix, system.matrix_inv, idx, idx + 1,
                         config.epsilon0, side, n_eff)
    zeros = np.zeros(n_pts - 1, dtype=np.intp)
    prof = _kernel_pairs(pts, system.matrix, system.matrix_inv, zeros,
                         np.arange(1, n_pts, dtype=np.intp),
                         config.epsilon0, side, n_eff)
    entries = []
    for n in n_range:
        if n > n_eff:
            entries.append({"n": n, "connected": False, "components": n_pts,
                            "diameter": math.inf})
            continue
        gaps = int(np.count_nonzero(cons < n))
        connected = gaps == 0
        # contiguous reach in grid steps from the base point's profile
        bad = np.flatnonzero(prof < n)
        reach = int(bad[0]) if len(bad) else n_pts - 1
        if connected and reach >= 1:
            diameter = int(math.ceil((n_pts - 1) / reach))
        else:
            diameter = math.inf
            connected = False
        entries.append(
            {"n": n, "connected": connected, "components": 1 + gaps,
             "diameter": diameter}
        )
    return ConnectivityReport(entries, n_pts, method="interval")


def write_edge_csv(graph: LeafGraph, path):
    """Edge list as CSV with columns i, j (each undirected edge once)."""
    coo = sp.triu(graph.adjacency, k=1).tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("i,j\n")
        for i, j in zip(coo.row, coo.col):
            fh.write(f"{i},{j}\n")
