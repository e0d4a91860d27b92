"""Independent brute-force oracles used to freeze expected test values.

These deliberately re-derive quantities from first principles (plain
numpy loops, hand BFS over adjacency lists) and never call the library
code paths they are checking.
"""

import itertools
import math
from collections import deque

import numpy as np


def wrap(delta):
    return delta - np.round(delta)


def separation_series(matrix, x, y, n_max):
    """dict k -> |wrap(M^k wrap(x - y))| for k in [-n_max, n_max]."""
    matrix = np.asarray(matrix, dtype=float)
    inv = np.linalg.inv(matrix)
    out = {}
    delta = wrap(np.asarray(x, float) - np.asarray(y, float))
    cur = delta.copy()
    out[0] = float(np.linalg.norm(cur))
    for k in range(1, n_max + 1):
        cur = wrap(matrix @ cur)
        out[k] = float(np.linalg.norm(cur))
    cur = delta.copy()
    for k in range(1, n_max + 1):
        cur = wrap(inv @ cur)
        out[-k] = float(np.linalg.norm(cur))
    return out


def ell_brute(matrix, x, y, eps0, n_max, side):
    """Log-scale reading by direct window scanning.

    Returns (value, flag) with flag in {"ok", "truncated", "invalid"}.
    """
    d = separation_series(matrix, x, y, n_max)
    fails = [k for k, v in d.items() if v > eps0]
    if side == "stable":
        if not fails:
            return n_max, "truncated"
        worst = max(fails)
        if worst == n_max:
            return None, "invalid"
        return -worst - 1, "ok"
    if side == "unstable":
        if not fails:
            return n_max, "truncated"
        worst = min(fails)
        if worst == -n_max:
            return None, "invalid"
        return worst - 1, "ok"
    radius = min((abs(k) for k in fails), default=None)
    if radius is None:
        return n_max, "truncated"
    return radius - 1, "ok"


def bfs_distance(adjacency_sets, src, dst):
    """Hand BFS over a dict/list of neighbor sets."""
    if src == dst:
        return 0
    seen = {src}
    frontier = deque([(src, 0)])
    while frontier:
        v, d = frontier.popleft()
        for w in adjacency_sets[v]:
            if w == dst:
                return d + 1
            if w not in seen:
                seen.add(w)
                frontier.append((w, d + 1))
    return math.inf


def adjacency_sets_from_matrix(bool_matrix):
    n = len(bool_matrix)
    return [set(np.flatnonzero(bool_matrix[i]).tolist()) for i in range(n)]


def chain_infimum(weights, i, j):
    """Brute-force min over all chains (<= n points, no revisits)."""
    n = len(weights)
    best = weights[i][j]
    nodes = [v for v in range(n) if v not in (i, j)]
    for r in range(1, n - 1):
        for mid in itertools.permutations(nodes, r):
            path = [i, *mid, j]
            cost = sum(weights[a][b] for a, b in zip(path, path[1:]))
            best = min(best, cost)
    return best


def gromov_delta_exact(dist):
    """Max four-point deficiency over all quadruples (vectorized).

    Degenerate quadruples (repeated vertices) contribute non-positive
    deficiencies, so including them does not change the maximum.
    """
    n = dist.shape[0]
    worst = 0.0
    for w in range(n):
        g = 0.5 * (dist[w][:, None] + dist[w][None, :] - dist)
        for z in range(n):
            col = g[:, z]
            defect = np.minimum(col[:, None], col[None, :]) - g
            worst = max(worst, float(defect.max()))
    return worst
