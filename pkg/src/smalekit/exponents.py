"""Estimation of stable/unstable lower and upper critical exponents from
the growth of chain distances, the pinched-spectrum check, and the
codimension-one entropy comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import leafgraph, logscale, models
from .errors import (
    InsufficientData,
    NonFiniteExponent,
    NotCodimensionOne,
    NotHyperbolic,
    TruncationDominated,
    ValidationError,
)


@dataclass
class GrowthFit:
    slope: float
    intercept: float
    r_squared: float
    n_used: list


def growth_fit(dn_series) -> GrowthFit:
    """Least-squares fit of ln(d_n) against n.

    Uses only finite readings with d_n >= 2; requires at least four.
    """
    pts = [(n, d) for n, d in dn_series if math.isfinite(d) and d >= 2]
    if len(pts) < 4:
        raise InsufficientData(
            f"need >= 4 finite readings with d_n >= 2, got {len(pts)}"
        )
    ns = np.array([p[0] for p in pts], dtype=float)
    ys = np.log([p[1] for p in pts])
    slope, intercept = np.polyfit(ns, ys, 1)
    resid = ys - (slope * ns + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return GrowthFit(float(slope), float(intercept), max(0.0, min(1.0, r2)),
                     [int(n) for n in ns])


@dataclass
class ExponentConfig:
    logscale: logscale.LogScaleConfig = field(default_factory=logscale.LogScaleConfig)
    window: float = 0.2
    spacing: float = None       # None: per-ray automatic from the n_hi rule
    n_lo: int = 2
    n_hi: int = 12
    anchor: int = 0             # pairs are normalized to ell in [anchor, anchor+1]
    min_pairs: int = 20
    n_pairs: int = 24
    depth: int = 4              # shift samples
    min_reach: int = 4          # a level is usable when edges span >= this many net steps
    auto_levels: int = 4        # auto spacing resolves this many levels above n_lo
    max_ray_points: int = 3500


def _ray_rate(system, side, direction, k=12):
    """Empirical expansion factor of a leaf direction under the
    leaf-expanding dynamics (backward for stable leaves)."""
    m = (system.matrix_inv if side == "stable" else system.matrix).astype(float)
    v = np.asarray(direction, float)
    v = v / np.linalg.norm(v)
    growth = np.linalg.norm(np.linalg.matrix_power(m, k) @ v)
    return growth ** (1.0 / k)


def _ray_sample(system, side, direction, config, base):
    eps0 = config.logscale.epsilon0
    spacing = config.spacing
    window = config.window
    if spacing is None:
        rate = _ray_rate(system, side, direction)
        n_top = min(config.n_hi, config.n_lo + config.auto_levels - 1)
        # margin of 2 extra steps keeps the top level usable despite the
        # floor in the integer reading at the boundary separation
        spacing = eps0 * rate ** (-n_top) / (config.min_reach + 2)
        max_window = config.max_ray_points * spacing / 2.0
        # pair spans reach 2*window, which must cover anchor separations
        window = min(window, max(max_window, 0.35 * eps0))
    return models.leaf_sample(system, base, side, window=window, spacing=spacing,
                              direction=direction)


def _usable_levels(ell, config):
    """Levels whose edges span at least min_reach net steps at mid-sample."""
    vals = ell.values
    mid = vals.shape[0] // 2
    levels = []
    for n in range(config.n_lo, min(config.n_hi, ell.n_max - 1) + 1):
        reach = 0
        j = mid + 1
        while j < vals.shape[0] and vals[mid, j] >= n and vals[mid, j] != ell.n_max:
            reach += 1
            j += 1
        if reach >= config.min_reach:
            levels.append(n)
    return levels


def _anchor_pairs(sample, ell, config):
    """Pairs with ell in [anchor, anchor+1].

    On ray samples the largest distinct separations are taken first:
    small-separation anchors produce heavily quantized chain counts that
    bias the percentile estimates.
    """
    vals = ell.values
    mask = (vals == config.anchor) | (vals == config.anchor + 1)
    mask &= ~ell.invalid & ~ell.truncated
    iu, ju = np.where(np.triu(mask, k=1))
    if len(iu) == 0:
        return []
    if sample.kind == "ray":
        sep = np.abs(sample.params[ju] - sample.params[iu])
        order = np.argsort(-sep, kind="stable")
        pairs, seen = [], set()
        for idx in order:
            key = int(ju[idx]) - int(iu[idx])
            if key in seen:
                continue
            seen.add(key)
            pairs.append((int(iu[idx]), int(ju[idx])))
            if len(pairs) >= config.n_pairs:
                break
        return pairs
    take = min(config.n_pairs, len(iu))
    pick = np.unique(np.linspace(0, len(iu) - 1, take).astype(int))
    return list(zip(iu[pick].tolist(), ju[pick].tolist()))


def _pair_dn_table(sample, ell, pairs, levels):
    """d_n for each anchor pair at each usable level, via BFS."""
    sources = sorted({i for i, _ in pairs})
    src_index = {s: k for k, s in enumerate(sources)}
    table = {pair: {} for pair in pairs}
    for n in levels:
        graph = leafgraph.build_gamma(sample, ell, n)
        dmat = leafgraph.distances_from(graph, sources)
        for i, j in pairs:
            d = dmat[src_index[i], j]
            table[(i, j)][n] = math.inf if np.isinf(d) else float(d)
    return table


def critical_exponents(system, side: str, config: ExponentConfig = None, seed=0):
    """Percentile estimates of the lower/upper critical exponents.

    Per anchor pair (normalized to ell in [anchor, anchor+1]) the growth
    of d_n over the usable levels is fitted; lower/upper are the 5th/95th
    percentiles of the per-pair slopes.  The pipeline is deterministic;
    `seed` is accepted for interface uniformity with the sampled
    estimators and echoed by the CLI reports.
    """
    config = config or ExponentConfig()
    base = models.default_base(system)

    slopes = []
    fits = []
    dn_rows = []
    attempted = 0
    missing = 0
    total_anchor_pairs = 0
    rays = []

    if system.kind == "torus":
        directions = models.leaf_directions(system, side)
        if len(directions) >= 2:
            u1, u2 = directions[0], directions[-1]
            directions = list(directions) + [(u1 + u2) / np.linalg.norm(u1 + u2)]
        samples = [
            (_ray_sample(system, side, u, config, base), u) for u in directions
        ]
    else:
        samples = [(models.leaf_sample(system, base, side, depth=config.depth), None)]

    for ray_id, (sample, direction) in enumerate(samples):
        ell = logscale.ell_matrix(system, sample, side, config.logscale)
        levels = _usable_levels(ell, config)
        pairs = _anchor_pairs(sample, ell, config)
        total_anchor_pairs += len(pairs)
        rays.append(
            {
                "ray": ray_id,
                "points": len(sample),
                "spacing": sample.spacing,
                "levels": levels,
                "pairs": len(pairs),
                "direction": None if direction is None else direction.tolist(),
            }
        )
        if not pairs or not levels:
            missing += len(pairs) * max(1, len(levels))
            attempted += len(pairs) * max(1, len(levels))
            continue
        table = _pair_dn_table(sample, ell, pairs, levels)
        for pid, pair in enumerate(pairs):
            series = sorted(table[pair].items())
            for n, d in series:
                dn_rows.append((f"ray{ray_id}-p{pid}", n, d))
            attempted += len(series)
            missing += sum(1 for _, d in series if not math.isfinite(d))
            try:
                fit = growth_fit(series)
            except InsufficientData:
                continue
            slopes.append(fit.slope)
            fits.append(fit)

    if attempted and missing / attempted > 0.5:
        raise TruncationDominated(
            f"{missing}/{attempted} chain-distance readings are non-finite"
        )
    if total_anchor_pairs < config.min_pairs:
        raise InsufficientData(
            f"found {total_anchor_pairs} anchor pairs, need {config.min_pairs}"
        )
    if not slopes:
        raise InsufficientData("no anchor pair produced a usable growth fit")

    lower = float(np.percentile(slopes, 5))
    upper = float(np.percentile(slopes, 95))
    lower, upper = min(lower, upper), max(lower, upper)
    diagnostics = {
        "slopes": [float(s) for s in slopes],
        "raw_min": float(min(slopes)),
        "raw_max": float(max(slopes)),
        "r_squared": [f.r_squared for f in fits],
        "rays": rays,
        "dn_rows": dn_rows,
        "readings_attempted": attempted,
        "readings_nonfinite": missing,
        "anchor": config.anchor,
        "side": side,
    }
    return lower, upper, diagnostics


@dataclass
class ExponentReport:
    a0: float
    a1: float
    b0: float
    b1: float
    spreads: dict
    pinched_margin: float
    diagnostics: dict = field(default_factory=dict, repr=False)


def exponent_report(system, config: ExponentConfig = None, seed=0) -> ExponentReport:
    """Estimate all four critical exponents and the pinched margin."""
    a0, a1, diag_s = critical_exponents(system, "stable", config, seed)
    b0, b1, diag_u = critical_exponents(system, "unstable", config, seed)
    spreads = {
        "stable_iqr": _iqr(diag_s["slopes"]),
        "unstable_iqr": _iqr(diag_u["slopes"]),
    }
    margin = a0 / a1 + b0 / b1 - 1.0
    return ExponentReport(
        a0=a0, a1=a1, b0=b0, b1=b1, spreads=spreads, pinched_margin=margin,
        diagnostics={"stable": diag_s, "unstable": diag_u},
    )


def _iqr(values):
    lo, hi = np.percentile(values, [25, 75])
    return float(hi - lo)


def pinched_check(report: ExponentReport) -> dict:
    """margin = a0/a1 + b0/b1 - 1; pinched iff margin > 0."""
    vals = (report.a0, report.a1, report.b0, report.b1)
    if not all(math.isfinite(v) and v > 0 for v in vals):
        raise NonFiniteExponent(f"exponents must be finite and positive: {vals}")
    margin = report.a0 / report.a1 + report.b0 / report.b1 - 1.0
    return {"margin": margin, "pinched": margin > 0}


def entropy_oracle(system_or_matrix) -> float:
    """Sum of ln|lambda| over expanding eigenvalues of a toral system."""
    if isinstance(system_or_matrix, models.ToralSystem):
        m = system_or_matrix.matrix.astype(float)
    else:
        m = np.asarray(system_or_matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError("entropy oracle needs a square matrix")
    eigs = np.linalg.eigvals(m)
    if np.any(np.abs(np.abs(eigs) - 1.0) <= 1e-9):
        raise NotHyperbolic(f"eigenvalue on the unit circle: {eigs}")
    return float(np.sum(np.log(np.abs(eigs[np.abs(eigs) > 1.0]))))


def codim_one_check(system, side: str = "stable", config: ExponentConfig = None,
                    seed=0) -> dict:
    """Compare the one-dimensional side's exponents with the entropy."""
    if getattr(system, "kind", None) != "torus":
        raise NotCodimensionOne("codimension-one check needs a toral system")
    split = system.spectral_split
    dim = split.stable_dim if side == "stable" else split.unstable_dim
    if dim != 1:
        raise NotCodimensionOne(f"{side} subspace has dimension {dim}, expected 1")
    eta = entropy_oracle(system)
    a0, a1, diag = critical_exponents(system, side, config, seed)
    return {
        "a0": a0,
        "a1": a1,
        "eta": eta,
        "relative_gap": abs(a1 - a0) / a1,
        "eta_gap": abs(a0 - eta) / eta,
        "diagnostics": diag,
    }


# ---------------------------------------------------------------------------
# bound verification helpers (selfcheck / acceptance)


def universal_bound_ok(dn, n, ell_value, delta) -> bool:
    """d_n >= 2^((-1-D)/D) * e^((ln2/D)(n - ell)) with the D -> 0 limit
    (ultrametric case): finite chains exist only at levels n <= ell."""
    if math.isinf(dn):
        return True
    if delta <= 0:
        return n <= ell_value
    alpha = math.log(2.0) / delta
    c_star = 2.0 ** ((-1.0 - delta) / delta)
    return dn >= c_star * math.exp(alpha * (n - ell_value)) - 1e-9


def doubling_ok(dn_low, dn_high) -> bool:
    """d_{n+D} >= 2 d_n - 1 with infinity-aware comparison."""
    if math.isinf(dn_high):
        return True
    if math.isinf(dn_low):
        return False
    return dn_high >= 2 * dn_low - 1
