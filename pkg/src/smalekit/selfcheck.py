"""Fast invariant suite behind the `selfcheck` CLI command.

Each property runs on small standard samples (cat map and the full
2-shift) and returns (passed, detail).  The whole suite is budgeted to
stay under a minute.
"""

from __future__ import annotations

import math

import numpy as np

from . import exponents, leafgraph, linear, logscale, metrics, models
from .errors import SmaleKitError

# indirection point so a corrupted bracket can be injected in tests
_bracket = models.bracket

CAT = [[2, 1], [1, 1]]


def _cat():
    return models.ToralSystem(matrix=np.array(CAT), bracket_radius=0.1)


def _full_shift():
    return models.ShiftSystem(alphabet_size=2, transitions=np.ones((2, 2)))


def _cfg():
    return logscale.LogScaleConfig(epsilon0=0.05, n_max=40)


def check_bracket_axioms_torus(rng):
    system = _cat()
    worst = 0.0
    for _ in range(200):
        x = rng.random(2)
        y = np.mod(x + (rng.random(2) - 0.5) * 0.04, 1.0)
        z = np.mod(x + (rng.random(2) - 0.5) * 0.04, 1.0)
        xy = _bracket(system, x, y)
        if xy is None:
            continue
        lhs1 = _bracket(system, xy, z)
        rhs = _bracket(system, x, z)
        yz = _bracket(system, y, z)
        if lhs1 is None or rhs is None or yz is None:
            continue
        lhs2 = _bracket(system, x, yz)
        if lhs2 is None:
            continue
        worst = max(
            worst,
            models.dist(system, lhs1, rhs),
            models.dist(system, lhs2, rhs),
        )
    return worst <= 1e-9, f"max axiom defect {worst:.2e}"


def check_bracket_plaque_torus(rng):
    system = _cat()
    v_stable = models.leaf_directions(system, "stable")[0]
    worst = 0.0
    for _ in range(100):
        x = rng.random(2)
        t = (rng.random() - 0.5) * 0.05
        y = np.mod(x + t * v_stable, 1.0)
        out = _bracket(system, x, y)
        if out is None:
            return False, "stable-plaque pair left the bracket domain"
        worst = max(worst, models.dist(system, out, x))
    return worst <= 1e-9, f"max |[x,y]-x| {worst:.2e}"


def check_bracket_axioms_shift(rng):
    system = _full_shift()
    base = models.default_base(system)
    pts = models.leaf_sample(system, base, "stable", depth=3).points
    pts = pts + models.leaf_sample(system, base, "unstable", depth=3).points
    for _ in range(200):
        x, y, z = (pts[rng.integers(len(pts))] for _ in range(3))
        xy = _bracket(system, x, y)
        if xy is None:
            continue
        lhs = _bracket(system, xy, z)
        rhs = _bracket(system, x, z)
        if (lhs is None) != (rhs is None):
            return False, "bracket domain mismatch"
        if lhs is not None and not models.points_equal(system, lhs, rhs):
            return False, "[[x,y],z] != [x,z] on a shift triple"
    return True, "exact on all tested triples"


def check_expansivity(rng):
    cfg = _cfg()
    for system in (_cat(), _full_shift()):
        if system.kind == "torus":
            pairs = [(rng.random(2), rng.random(2)) for _ in range(1000)]
        else:
            base = models.default_base(system)
            pts = models.leaf_sample(system, base, "stable", depth=5).points
            pairs = [
                (pts[rng.integers(len(pts))], pts[rng.integers(len(pts))])
                for _ in range(200)
            ]
        for x, y in pairs:
            if models.points_equal(system, x, y):
                continue
            seen = False
            for n in range(0, cfg.n_max + 1):
                if (
                    models.orbit_distance(system, x, y, n) > cfg.epsilon0
                    or models.orbit_distance(system, x, y, -n) > cfg.epsilon0
                ):
                    seen = True
                    break
            if not seen:
                return False, "a distinct pair stayed inside the diagonal tube"
    return True, "all distinct pairs separated within the horizon"


def check_contraction(rng):
    system = _cat()
    v = models.leaf_directions(system, "stable")[0]
    lam = system.spectral_split.lambda_max
    mu = 1.0 / lam
    worst_c = 0.0
    for _ in range(50):
        x = rng.random(2)
        s = rng.random() * 0.1
        y = np.mod(x + s * v, 1.0)
        d0 = models.dist(system, x, y)
        if d0 == 0:
            continue
        for n in range(21):
            dn = models.orbit_distance(system, x, y, n)
            # amplified float dust floors the measurable decay
            noise_floor = 64 * np.finfo(float).eps * mu**n
            if dn <= noise_floor:
                continue
            worst_c = max(worst_c, dn / (lam**n * d0))
    return worst_c <= 2.0, f"fitted contraction constant {worst_c:.3f}"


def check_shift_identities(rng):
    cfg = _cfg()
    system = _full_shift()
    base = models.default_base(system)
    for side, shift_delta in (("stable", 1), ("unstable", -1)):
        pts = models.leaf_sample(system, base, side, depth=4).points
        for _ in range(100):
            x, y = pts[rng.integers(len(pts))], pts[rng.integers(len(pts))]
            if models.points_equal(system, x, y):
                continue
            v0 = logscale.internal_ell(system, x, y, side, cfg)
            v1 = logscale.internal_ell(
                system, models.iterate(system, x, 1), models.iterate(system, y, 1),
                side, cfg,
            )
            if v0.truncated or v1.truncated:
                continue
            if v1.value != v0.value + shift_delta:
                return False, f"{side} identity failed: {v0.value} -> {v1.value}"
    return True, "internal log-scales shift by +-1 under the dynamics"


def check_ell_le_internal(rng):
    cfg = _cfg()
    system = _cat()
    v = models.leaf_directions(system, "stable")[0]
    for _ in range(100):
        x = rng.random(2)
        t = (rng.random() - 0.5) * 0.2
        if abs(t) < 1e-6:
            continue
        y = np.mod(x + t * v, 1.0)
        std = logscale.standard_ell(system, x, y, cfg)
        intr = logscale.internal_ell(system, x, y, "stable", cfg)
        if std.truncated or intr.truncated or intr.value < 0:
            continue
        if std.value > intr.value:
            return False, f"ell={std.value} exceeds ell_plus={intr.value}"
        if intr.value > 0 and std.value != intr.value:
            return False, "ell != ell_plus despite ell_plus > 0"
    return True, "ell <= ell_plus, equal when positive"


def check_symmetry(rng):
    cfg = _cfg()
    system = _cat()
    for _ in range(200):
        x, y = rng.random(2), rng.random(2)
        a = logscale.standard_ell(system, x, y, cfg)
        b = logscale.standard_ell(system, y, x, cfg)
        if a.value != b.value:
            return False, "standard log-scale asymmetry"
    return True, "symmetric on all tested pairs"


def check_epsilon_stability(rng):
    cfg = _cfg()
    half = logscale.LogScaleConfig(epsilon0=cfg.epsilon0 / 2, n_max=cfg.n_max)
    system = _cat()
    worst = 0
    for _ in range(200):
        x, y = rng.random(2), rng.random(2)
        a = logscale.standard_ell(system, x, y, cfg)
        b = logscale.standard_ell(system, x, y, half)
        if a.truncated or b.truncated:
            continue
        worst = max(worst, abs(a.value - b.value))
    return worst <= 2, f"max shift under eps0 halving: {worst}"


def check_delta_shift_ultrametric(rng):
    cfg = logscale.LogScaleConfig(epsilon0=0.5, n_max=40)
    system = _full_shift()
    base = models.default_base(system)
    sample = models.leaf_sample(system, base, "stable", depth=4)
    ell = logscale.ell_matrix(system, sample, "stable", cfg)
    est = logscale.delta_from_matrix(sample, ell, n_triples=3000, rng=rng,
                                     structured=False)
    return est.delta == 0.0, f"delta = {est.delta}"


def check_delta_torus(rng):
    cfg = _cfg()
    system = _cat()
    sample = models.leaf_sample(system, np.zeros(2), "stable", window=0.2,
                                spacing=1e-3)
    ell = logscale.ell_matrix(system, sample, "stable", cfg)
    est = logscale.delta_from_matrix(sample, ell, n_triples=3000, rng=rng)
    return est.delta <= 2.0, f"delta = {est.delta}"


def check_gamma_nesting(rng):
    cfg = _cfg()
    system = _cat()
    sample = models.leaf_sample(system, np.zeros(2), "stable", window=0.05,
                                spacing=2e-4)
    ell = logscale.ell_matrix(system, sample, "stable", cfg)
    prev = None
    for n in range(2, 7):
        graph = leafgraph.build_gamma(sample, ell, n)
        cur = graph.adjacency
        if prev is not None and (cur.astype(int) - prev.astype(int)).max() > 0:
            return False, f"edges of Gamma_{n} not nested in Gamma_{n - 1}"
        prev = cur
    return True, "edge sets are nested"


def check_doubling_and_lower_bound(rng):
    cfg = _cfg()
    system = _cat()
    sample = models.leaf_sample(system, np.zeros(2), "stable", window=0.05,
                                spacing=2e-4)
    ell = logscale.ell_matrix(system, sample, "stable", cfg)
    est = logscale.delta_from_matrix(sample, ell, n_triples=2000, rng=rng)
    delta = int(math.ceil(est.delta))
    pairs = [(i, i + k) for i in (10, 50, 120) for k in (5, 40, 160) if i + k < len(sample)]
    levels = list(range(2, 7))
    dn = {}
    for n in levels + [n + delta for n in levels]:
        graph = leafgraph.build_gamma(sample, ell, n)
        mat = leafgraph.distances_from(graph, sorted({i for i, _ in pairs}))
        src = {s: r for r, s in enumerate(sorted({i for i, _ in pairs}))}
        for i, j in pairs:
            dn[(i, j, n)] = float(mat[src[i], j])
    for i, j in pairs:
        lv = float(ell.values[i, j])
        for n in levels:
            if not exponents.doubling_ok(dn[(i, j, n)], dn[(i, j, n + delta)]):
                return False, f"doubling failed at pair ({i},{j}), n={n}"
            if not exponents.universal_bound_ok(dn[(i, j, n)], n, lv, est.delta):
                return False, f"universal bound failed at pair ({i},{j}), n={n}"
    return True, f"holds with delta-hat {est.delta}"


def check_mather_implication(rng):
    for _ in range(10_000):
        l1, l2 = sorted(rng.uniform(0.01, 0.99, size=2))
        m2, m1 = sorted(rng.uniform(1.01, 50.0, size=2))
        res = linear.mather_check(linear.MatherBounds(l1, l2, m2, m1))
        if (res["brin1"] or res["brin2"]) and res["pinched_sum"] <= 1.0:
            return False, f"counterexample {(l1, l2, m2, m1)}"
    return True, "no counterexample in 10^4 random tuples"


def check_projection_algebra(rng):
    for matrix in (CAT, [[3, 1], [2, 1]], [[0, 1], [1, 1]]):
        split = linear.spectral_split(np.array(matrix))
        m = split.matrix.astype(float)
        checks = [
            np.linalg.norm(split.p_plus @ split.p_plus - split.p_plus),
            np.linalg.norm(split.p_minus @ split.p_minus - split.p_minus),
            np.linalg.norm(split.p_plus @ split.p_minus),
            np.linalg.norm(split.p_plus + split.p_minus - np.eye(2)),
            np.linalg.norm(split.p_plus @ m - m @ split.p_plus),
        ]
        if max(checks) > 1e-10:
            return False, f"projection defect {max(checks):.2e} for {matrix}"
    return True, "projections idempotent, complementary, commuting"


def check_metric_axioms(rng):
    cfg = _cfg()
    system = _cat()
    sample = models.leaf_sample(system, np.zeros(2), "stable", window=0.04,
                                spacing=1e-3)
    ell = logscale.ell_matrix(system, sample, "stable", cfg)
    metric = metrics.synthesize_metric(sample, ell, beta=0.5)
    pw = metric.pairwise
    if not np.array_equal(pw, pw.T):
        return False, "pairwise matrix not exactly symmetric"
    if np.any(np.diag(pw) != 0):
        return False, "nonzero diagonal"
    n = len(sample)
    best = np.full_like(pw, np.inf)
    for k in range(n):
        np.minimum(best, pw[:, [k]] + pw[[k], :], out=best)
    defect = float((pw - best).max())
    if defect > 1e-12:
        return False, f"triangle defect {defect:.2e}"
    direct = np.exp(-0.5 * ell.values.astype(float))
    np.fill_diagonal(direct, 0.0)
    if np.any(pw > direct):
        return False, "d_beta exceeds a direct edge weight"
    return True, "symmetry, triangle, and upper bound hold"


def check_digit_roundtrip(rng):
    split = linear.spectral_split(np.array(CAT))
    u = split.e_plus_basis[:, 0]
    worst = 0.0
    for _ in range(20):
        target = (rng.random() - 0.5) * 0.9 * u
        exp = linear.digit_expand(split, target, s_rad=2, n=40)
        err = np.linalg.norm(linear.reconstruct(split, exp, 40) - target)
        worst = max(worst, err)
    return worst < 1e-6, f"max reconstruction error {worst:.2e}"


def check_fixed_point(rng):
    m = np.array(CAT)
    worst = 0.0
    for _ in range(100):
        v0 = rng.standard_normal(2) * 5
        w0 = linear.affine_fixed_point(m, v0)
        worst = max(worst, float(np.linalg.norm(w0 - m @ w0 - v0)))
    return worst <= 1e-12, f"max residual {worst:.2e}"


PROPERTIES = [
    ("bracket-axioms-torus", "models", check_bracket_axioms_torus),
    ("bracket-plaque-torus", "models", check_bracket_plaque_torus),
    ("bracket-axioms-shift", "models", check_bracket_axioms_shift),
    ("expansivity", "models", check_expansivity),
    ("contraction", "models", check_contraction),
    ("ell-symmetry", "logscale", check_symmetry),
    ("ell-vs-internal", "logscale", check_ell_le_internal),
    ("shift-identities", "logscale", check_shift_identities),
    ("epsilon-halving-stability", "logscale", check_epsilon_stability),
    ("delta-shift-ultrametric", "logscale", check_delta_shift_ultrametric),
    ("delta-torus-bounded", "logscale", check_delta_torus),
    ("gamma-nesting", "leafgraph", check_gamma_nesting),
    ("doubling-and-lower-bound", "leafgraph", check_doubling_and_lower_bound),
    ("mather-implication", "linear", check_mather_implication),
    ("projection-algebra", "linear", check_projection_algebra),
    ("metric-axioms", "metrics", check_metric_axioms),
    ("digit-roundtrip", "linear", check_digit_roundtrip),
    ("fixed-point-residual", "linear", check_fixed_point),
]


def run_selfcheck(name_filter: str = None, seed: int = 0) -> list:
    """Run the (optionally filtered) property suite; returns result rows."""
    results = []
    for name, group, fn in PROPERTIES:
        if name_filter and name_filter not in name and name_filter != group:
            continue
        rng = np.random.default_rng(seed)
        try:
            passed, detail = fn(rng)
        except SmaleKitError as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(
            {"name": name, "group": group, "passed": bool(passed), "detail": detail}
        )
    return results
