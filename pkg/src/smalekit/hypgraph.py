"""Levelled graphs over abelian deck-group data, Gromov hyperbolicity
estimation, and the boundary map to the contracting subspace.

The graph has vertices (lattice point, level) with the lattice points
restricted to a tube around the contracting subspace; horizontal edges
join points differing by a generator, vertical edges join (g1, n) to
(g2, n+1) when phi(g2) - g1 is a generator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from . import linear
from .errors import InvalidPath, Oversize, ValidationError

MAX_VERTICES = 1_000_000


@dataclass
class GroupData:
    """Abelian deck-group data: matrix, generator radius, tube radius."""

    dim: int
    phi: np.ndarray
    gen_radius: int
    tube_radius: float
    split: linear.SpectralSplit = field(repr=False, default=None)

    def __post_init__(self):
        if self.split is None:
            self.split = linear.spectral_split(self.phi)
        self.phi = self.split.matrix
        if self.phi.shape != (self.dim, self.dim):
            raise ValidationError("phi shape must match dim")
        if self.gen_radius < 1:
            raise ValidationError("gen_radius must be >= 1")
        if self.tube_radius <= 0:
            raise ValidationError("tube_radius must be positive")
        self.phi_inv = linear.int_inverse(self.phi)

    def generators(self):
        """The sup-norm ball S (symmetric, contains 0)."""
        rng = range(-self.gen_radius, self.gen_radius + 1)
        return [np.array(s, dtype=np.int64) for s in itertools.product(rng, repeat=self.dim)]

    def in_generators(self, g):
        return max(abs(int(v)) for v in g) <= self.gen_radius


@dataclass
class LevelledGraph:
    """Truncated levelled graph; vertex id = level_index * T + point_index."""

    points: np.ndarray  # (T, d) lattice points of the tube
    levels: list
    adjacency: sp.csr_matrix = field(repr=False)
    data: GroupData = None
    truncation: tuple = None  # (N, rho)

    @property
    def n_vertices(self):
        return self.adjacency.shape[0]

    @property
    def n_tube_points(self):
        return self.points.shape[0]

    def point_index(self, g):
        key = tuple(int(v) for v in g)
        return self._index.get(key)

    def vertex_id(self, g, level):
        pi = self.point_index(g)
        if pi is None or level not in self._level_index:
            return None
        return self._level_index[level] * self.n_tube_points + pi

    def vertex_label(self, vid):
        li, pi = divmod(int(vid), self.n_tube_points)
        return self.points[pi], self.levels[li]

    def finalize(self):
        self._index = {tuple(int(v) for v in g): i for i, g in enumerate(self.points)}
        self._level_index = {n: i for i, n in enumerate(self.levels)}
        return self


def _tube_points(data: GroupData, rho: int):
    if (2 * rho + 1) ** data.dim > 4e7:
        raise Oversize("lattice box too large to enumerate")
    axes = [np.arange(-rho, rho + 1)] * data.dim
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, data.dim)
    proj = grid @ data.split.p_minus.T
    keep = np.linalg.norm(proj, axis=1) <= data.tube_radius
    return grid[keep].astype(np.int64)


def build_xi(data: GroupData, levels_n: int, rho: int) -> LevelledGraph:
    """Truncated levelled graph over the tube, levels |n| <= levels_n."""
    pts = _tube_points(data, rho)
    t = len(pts)
    levels = list(range(-levels_n, levels_n + 1))
    n_vert = t * len(levels)
    if n_vert > MAX_VERTICES:
        raise Oversize(f"{n_vert} vertices exceed the {MAX_VERTICES} budget")
    if t == 0:
        raise ValidationError("tube is empty; increase rho or tube_radius")

    index = {tuple(int(v) for v in g): i for i, g in enumerate(pts)}
    offsets = data.generators()

    horiz = []
    for s in offsets:
        if not np.any(s):
            continue
        shifted = pts + s
        for i, g in enumerate(shifted):
            j = index.get(tuple(int(v) for v in g))
            if j is not None:
                horiz.append((i, j))
    vert = []
    phi_pts = pts @ data.phi.T
    for s in offsets:
        shifted = phi_pts - s
        for i2, g in enumerate(shifted):
            i1 = index.get(tuple(int(v) for v in g))
            if i1 is not None:
                vert.append((i1, i2))

    rows, cols = [], []
    for li in range(len(levels)):
        base = li * t
        for i, j in horiz:
            rows.append(base + i)
            cols.append(base + j)
        if li + 1 < len(levels):
            up = (li + 1) * t
            for i1, i2 in vert:
                rows.append(base + i1)
                cols.append(up + i2)
                rows.append(up + i2)
                cols.append(base + i1)
    data_arr = np.ones(len(rows), dtype=bool)
    adj = sp.csr_matrix((data_arr, (rows, cols)), shape=(n_vert, n_vert), dtype=bool)
    graph = LevelledGraph(points=pts, levels=levels, adjacency=adj, data=data,
                          truncation=(levels_n, rho))
    return graph.finalize()


def build_flat_control(rho: int, width: int, s_rad: int = 1) -> LevelledGraph:
    """Single-level rectangular lattice tube: the non-hyperbolic control."""
    xs = np.arange(-rho, rho + 1)
    ys = np.arange(-width, width + 1)
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    index = {tuple(int(v) for v in g): i for i, g in enumerate(pts)}
    rows, cols = [], []
    for s in itertools.product(range(-s_rad, s_rad + 1), repeat=2):
        if s == (0, 0):
            continue
        for i, g in enumerate(pts + np.array(s)):
            j = index.get(tuple(int(v) for v in g))
            if j is not None:
                rows.append(i)
                cols.append(j)
    adj = sp.csr_matrix(
        (np.ones(len(rows), dtype=bool), (rows, cols)),
        shape=(len(pts), len(pts)),
        dtype=bool,
    )
    graph = LevelledGraph(points=pts.astype(np.int64), levels=[0], adjacency=adj,
                          data=None, truncation=(0, rho))
    return graph.finalize()


@dataclass
class HyperbolicityEstimate:
    delta: float
    quadruples_tested: int
    truncation: tuple
    restricted_to_component: bool = False
    component_size: int = 0


def delta_hyperbolicity(graph: LevelledGraph, n_quadruples: int = 4000,
                        seed: int = 0, n_bases: int = 100,
                        pool_size: int = 300) -> HyperbolicityEstimate:
    """Four-point hyperbolicity defect over sampled quadruples.

    Gromov products are taken from a fixed base vertex (the origin at
    level 0 when present) plus random bases; the estimate is the largest
    deficiency min((x|z)_w, (y|z)_w) - (x|y)_w over sampled (w, x, y, z).
    """
    rng = np.random.default_rng(seed)
    ncomp, labels = csgraph.connected_components(graph.adjacency, directed=False)
    restricted = ncomp > 1
    if restricted:
        main = np.argmax(np.bincount(labels))
        members = np.flatnonzero(labels == main)
    else:
        members = np.arange(graph.n_vertices)

    origin = None
    if graph.data is not None:
        origin = graph.vertex_id(np.zeros(graph.points.shape[1], dtype=int), 0)
    elif graph.vertex_id(np.zeros(2, dtype=int), 0) is not None:
        origin = graph.vertex_id(np.zeros(2, dtype=int), 0)
    pool = set()
    if origin is not None and labels[origin] == labels[members[0]]:
        pool.add(int(origin))
    need = min(pool_size, len(members)) - len(pool)
    pool.update(int(v) for v in rng.choice(members, size=max(need, 0), replace=False))
    pool = sorted(pool)
    base_count = min(n_bases + 1, len(pool))

    dist = csgraph.dijkstra(graph.adjacency, unweighted=True, indices=pool)
    dist = dist[:, pool]  # (P, P) distances within the pool
    p = len(pool)
    if p < 4:
        raise ValidationError("component too small for quadruples")

    delta = 0.0
    tested = 0
    quads = rng.integers(0, p, size=(n_quadruples, 3))
    bases = rng.integers(0, base_count, size=n_quadruples)
    for (x, y, z), w in zip(quads, bases):
        if len({x, y, z, w}) < 4:
            continue
        dwx, dwy, dwz = dist[w, x], dist[w, y], dist[w, z]
        dxy, dxz, dyz = dist[x, y], dist[x, z], dist[y, z]
        if not all(map(math.isfinite, (dwx, dwy, dwz, dxy, dxz, dyz))):
            continue
        g_xy = 0.5 * (dwx + dwy - dxy)
        g_xz = 0.5 * (dwx + dwz - dxz)
        g_yz = 0.5 * (dwy + dwz - dyz)
        defect = min(g_xz, g_yz) - g_xy
        delta = max(delta, defect)
        tested += 1
    return HyperbolicityEstimate(
        delta=float(delta),
        quadruples_tested=tested,
        truncation=graph.truncation,
        restricted_to_component=restricted,
        component_size=len(members),
    )


# ---------------------------------------------------------------------------
# boundary map


def _apply_int(matrix, vec):
    """Exact integer matrix action on a python-int vector."""
    return tuple(
        sum(int(matrix[r, c]) * int(vec[c]) for c in range(len(vec)))
        for r in range(matrix.shape[0])
    )


def boundary_point(data: GroupData, digits, n_stop: int):
    """Contracting-space limit point of an ascending vertex path.

    `digits` is the vertex path (g_n): consecutive entries must satisfy
    the vertical-edge rule phi(g_{n+1}) - g_n in S.  Returns
    P+(phi^n_stop(g_n_stop)) evaluated stably as the geometric series
    P+(g_0) + sum phi^i P+(s_i) with s_i = phi(g_{i+1}) - g_i; the path
    vertices themselves may be astronomically large, so all integer
    arithmetic is exact and only the small step vectors reach floats.
    """
    path = [tuple(int(v) for v in g) for g in digits]
    if n_stop >= len(path):
        raise ValidationError("n_stop exceeds the path length")
    steps = []
    for i in range(n_stop):
        phi_g = _apply_int(data.phi, path[i + 1])
        s = tuple(a - b for a, b in zip(phi_g, path[i]))
        if not data.in_generators(s):
            raise InvalidPath(f"step {i}: phi(g_{i + 1}) - g_{i} = {s} outside S")
        steps.append(np.array(s, dtype=float))

    split = data.split
    b_plus = split.e_plus_basis

    def coords(vec):
        vec = np.asarray(vec, dtype=float)
        return np.linalg.lstsq(b_plus, split.p_plus @ vec, rcond=None)[0]

    if not steps:
        return b_plus @ coords(path[0])
    terms = [coords(path[0]) + coords(steps[0])]
    terms += [coords(s) for s in steps[1:]]
    acc = terms[-1]
    for c in reversed(terms[:-1]):
        acc = split.stable_block @ acc + c
    return b_plus @ acc


def path_from_expansion(data: GroupData, expansion) -> list:
    """Levelled-graph vertex path realizing a digit expansion.

    With partial sums h_n = phi^n(g_n) + ... + phi(g_1) + g_0, the
    vertices v_0 = h_0, v_n = phi^{-n}(h_{n-1}) satisfy the vertical-edge
    rule with the same digit set, and P+(phi^n(v_n)) converges to the
    target.  Computed with exact python-int arithmetic (the vertices grow
    geometrically along the contracting space).
    """
    h_prev = tuple(int(v) for v in expansion.g0)
    path = [h_prev]
    for n in range(1, len(expansion.digits) + 1):
        g = tuple(int(x) for x in expansion.digits[n - 1])
        w = g
        for _ in range(n):
            w = _apply_int(data.phi, w)
        v = h_prev
        for _ in range(n):
            v = _apply_int(data.phi_inv, v)
        path.append(v)
        h_prev = tuple(a + b for a, b in zip(h_prev, w))
    return path


def descending_merge(graph: LevelledGraph, n_pairs: int = 20, max_start_dist: int = 6,
                     seed: int = 0) -> dict:
    """Depth after which descending paths from nearby level-0 vertices
    come within graph distance 2 (fitted per graph)."""
    data = graph.data
    if data is None:
        raise ValidationError("descending merge needs group data")
    rng = np.random.default_rng(seed)
    t = graph.n_tube_points
    li0 = graph.levels.index(0)
    level0 = np.arange(li0 * t, (li0 + 1) * t)
    dist0 = csgraph.dijkstra(graph.adjacency, unweighted=True,
                             indices=level0[: min(50, t)])
    pairs = []
    for a_row, a in enumerate(level0[: min(50, t)]):
        close = np.flatnonzero(
            (dist0[a_row, level0] > 0) & (dist0[a_row, level0] <= max_start_dist)
        )
        for b in close[:4]:
            pairs.append((int(a), int(level0[b])))
    order = rng.permutation(len(pairs))
    pairs = [pairs[i] for i in order[:n_pairs]]
    if not pairs:
        raise ValidationError("no nearby level-0 pairs found")

    min_level = graph.levels[0]
    depth_needed = 0
    gens = data.generators()
    for a, b in pairs:
        ga, _ = graph.vertex_label(a)
        gb, _ = graph.vertex_label(b)
        ca, cb = ga, gb
        level = 0
        merged_at = None
        while level - 1 >= min_level:
            ca = _descend(graph, data, gens, ca)
            cb = _descend(graph, data, gens, cb)
            if ca is None or cb is None:
                break
            level -= 1
            va = graph.vertex_id(ca, level)
            vb = graph.vertex_id(cb, level)
            d = csgraph.dijkstra(graph.adjacency, unweighted=True, indices=va)[vb]
            if d <= 2:
                merged_at = -level
                break
        if merged_at is None:
            return {"merged": False, "depth_required": math.inf,
                    "pairs_tested": len(pairs)}
        depth_needed = max(depth_needed, merged_at)
    return {"merged": True, "depth_required": depth_needed, "pairs_tested": len(pairs)}


def _descend(graph, data, gens, g):
    """A valid descending neighbor staying nearest the tube core."""
    target = np.array(_apply_int(data.phi, g), dtype=np.int64)
    best = None
    best_norm = None
    for s in gens:
        cand = target - s
        if graph.point_index(cand) is None:
            continue
        norm = float(np.linalg.norm(data.split.p_minus @ cand.astype(float)))
        key = (norm, tuple(int(v) for v in cand))
        if best is None or key < best_norm:
            best = cand
            best_norm = key
    return best
