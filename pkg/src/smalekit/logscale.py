"""Standard and internal log-scales, the quasi-ultrametric defect, and
the greedy subsequence extraction used by the metric construction.

Log-scale scans over whole samples run through the kernel backend
(compiled Cython when available, pure numpy otherwise); single-pair
operations share the same conventions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import models
from ._kernels import NOT_ON_LEAF, ell_matrix as _kernel_matrix, ell_pairs as _kernel_pairs
from .errors import InsufficientData, NotOnLeaf, ValidationError


@dataclass
class LogScaleConfig:
    """Radius of the diagonal neighborhood and the truncation horizon."""

    epsilon0: float = 0.05
    n_max: int = 40

    def __post_init__(self):
        if self.epsilon0 <= 0:
            raise ValidationError("epsilon0 must be positive")
        if self.n_max < 10:
            raise ValidationError("n_max must be at least 10")


@dataclass
class LogScaleValue:
    """A single log-scale reading; truncated means 'at least n_max'."""

    value: float
    truncated: bool = False

    @property
    def finite(self):
        return math.isfinite(self.value) and not self.truncated


_SIDES = {"stable": 1, "unstable": -1, "standard": 0}

# float dust scale for the two-sided scan (no leaf membership involved)
_FLOAT_DUST = 1e-14


def effective_horizon(system, config: LogScaleConfig, side: str) -> int:
    """Largest certifiable scan depth for a torus system.

    The expanding direction amplifies off-leaf dust (leaf tolerance for
    one-sided scans, raw float dust for the standard scan) by its
    spectral rate per step; once the amplified dust could reach eps0 a
    failure is indistinguishable from noise, so the scan is truncated
    there.  Shift scans are exact and use the configured horizon.
    """
    if system.kind != "torus":
        return config.n_max
    eigs = np.abs(np.linalg.eigvals(system.matrix.astype(float)))
    mu_max = float(eigs.max())
    lam_min = float(eigs.min())
    if side == "stable":
        rate, tol = mu_max, models.LEAF_TOL
    elif side == "unstable":
        rate, tol = 1.0 / lam_min, models.LEAF_TOL
    else:
        rate, tol = max(mu_max, 1.0 / lam_min), _FLOAT_DUST
    k = int(math.floor(math.log(config.epsilon0 / tol) / math.log(rate)))
    return int(min(config.n_max, max(10, k)))


def _value_from_code(code, n_max, side):
    if code == NOT_ON_LEAF:
        raise NotOnLeaf(
            f"points do not converge on the {side} side within n_max={n_max}"
        )
    return LogScaleValue(float(code), truncated=(code == n_max))


def standard_ell(system, x, y, config: LogScaleConfig) -> LogScaleValue:
    """Largest n with dist(f^k x, f^k y) <= eps0 for all |k| <= n.

    Returns -1 when the pair is already apart at k = 0 and +inf when the
    points coincide.
    """
    return _single_pair(system, x, y, "standard", config)


def internal_ell(system, x, y, side: str, config: LogScaleConfig) -> LogScaleValue:
    """One-sided log-scale on a leaf: largest n0 with the orbit pair
    inside the eps0-neighborhood for all times >= -n0 (stable side) or
    <= n0 (unstable side).  Raises NotOnLeaf when the required tail never
    settles below eps0 within the horizon."""
    if side not in ("stable", "unstable"):
        raise ValidationError("side must be 'stable' or 'unstable'")
    return _single_pair(system, x, y, side, config)


def _single_pair(system, x, y, side, config):
    if models.points_equal(system, x, y):
        return LogScaleValue(math.inf, truncated=False)
    if system.kind == "torus":
        n_eff = effective_horizon(system, config, side)
        pts = np.mod(np.vstack([x, y]).astype(float), 1.0)
        code = int(
            _kernel_pairs(
                pts, system.matrix, system.matrix_inv,
                np.array([0]), np.array([1]),
                config.epsilon0, _SIDES[side], n_eff,
            )[0]
        )
        return _value_from_code(code, n_eff, side)
    return _shift_single_pair(system, x, y, side, config)


def _shift_single_pair(system, x, y, side, config):
    n_max = config.n_max
    fails = [
        k
        for k in range(-n_max, n_max + 1)
        if models.dist(system, models.iterate(system, x, k), models.iterate(system, y, k))
        > config.epsilon0
    ]
    if side == "stable":
        if not fails:
            return LogScaleValue(float(n_max), truncated=True)
        worst = max(fails)
        if worst == n_max:
            raise NotOnLeaf("forward distances do not settle below eps0")
        return LogScaleValue(float(-worst - 1))
    if side == "unstable":
        if not fails:
            return LogScaleValue(float(n_max), truncated=True)
        worst = min(fails)
        if worst == -n_max:
            raise NotOnLeaf("backward distances do not settle below eps0")
        return LogScaleValue(float(worst - 1))
    radius = min((abs(k) for k in fails), default=None)
    if radius is None:
        return LogScaleValue(float(n_max), truncated=True)
    return LogScaleValue(float(radius - 1))


# ---------------------------------------------------------------------------
# sample-wide matrices


@dataclass
class EllMatrix:
    """Symmetric matrix of log-scale readings over a sample.

    values[i, j] == n_max encodes a truncated reading (>= n_max);
    NOT_ON_LEAF marks pairs that fail the leaf precondition.
    """

    values: np.ndarray
    side: str
    epsilon0: float
    n_max: int

    @property
    def truncated(self):
        return self.values == self.n_max

    @property
    def invalid(self):
        return self.values == NOT_ON_LEAF

    def finite_offdiag(self):
        mask = ~self.truncated & ~self.invalid
        np.fill_diagonal(mask, False)
        return mask


def ell_matrix(system, sample, side: str, config: LogScaleConfig) -> EllMatrix:
    """Pairwise internal (or standard) log-scale over a leaf sample."""
    if side not in _SIDES:
        raise ValidationError(f"side must be one of {sorted(_SIDES)}")
    if system.kind == "torus":
        n_eff = effective_horizon(system, config, side)
        values = _kernel_matrix(
            sample.coords(), system.matrix, system.matrix_inv,
            config.epsilon0, _SIDES[side], n_eff,
        )
        np.fill_diagonal(values, n_eff)
        return EllMatrix(values, side, config.epsilon0, n_eff)
    return _shift_matrix(system, sample, side, config)


def agreement_threshold(system, epsilon0):
    """Smallest first-disagreement index m0 with e^{-kappa m0} <= eps0."""
    if epsilon0 >= 1.0:
        return 0
    return int(math.ceil(math.log(1.0 / epsilon0) / system.symbol_decay - 1e-12))


def _shift_matrix(system, sample, side, config):
    pts = sample.points
    n = len(pts)
    lo = min(p.core_span()[0] for p in pts)
    hi = max(p.core_span()[1] for p in pts)
    words = np.array([p.window(lo, hi) for p in pts], dtype=np.int16)
    positions = np.arange(lo, hi + 1)
    m0 = agreement_threshold(system, config.epsilon0)
    n_max = config.n_max
    values = np.full((n, n), n_max, dtype=np.int16)
    for i in range(n):
        diff = words[i + 1 :] != words[i]  # (n-i-1, width)
        for joff in np.flatnonzero(diff.any(axis=1)):
            d_pos = positions[diff[joff]]
            if m0 == 0:
                val = n_max
            elif side == "stable":
                val = -int(d_pos.max()) - m0
            elif side == "unstable":
                val = int(d_pos.min()) - m0
            else:
                val = max(int(np.min(np.abs(d_pos))) - m0, -1)
            j = i + 1 + joff
            v = int(np.clip(val, -n_max, n_max))
            values[i, j] = v
            values[j, i] = v
    return EllMatrix(values, side, config.epsilon0, n_max)


# ---------------------------------------------------------------------------
# quasi-ultrametric defect


@dataclass
class DeltaEstimate:
    """Largest observed violation of the ultrametric inequality."""

    delta: float
    triples_tested: int
    worst_triple: tuple


def estimate_delta(triples, min_triples: int = 100) -> DeltaEstimate:
    """Defect estimate from sampled triples.

    Each entry is ((x, y, z), (l_xy, l_yz, l_xz)); triples with a
    non-finite reading are skipped.  The defect of a triple is the worst
    of its three middle-point rotations; the estimate is the maximum over
    triples, clamped at zero.
    """
    best = -math.inf
    worst_triple = None
    tested = 0
    for points, (a, b, c) in triples:
        if not all(math.isfinite(v) for v in (a, b, c)):
            continue
        tested += 1
        defect = max(min(a, b) - c, min(a, c) - b, min(b, c) - a)
        if defect > best:
            best = defect
            worst_triple = tuple(points)
    if tested < min_triples:
        raise InsufficientData(
            f"need at least {min_triples} usable triples, got {tested}"
        )
    return DeltaEstimate(delta=max(best, 0.0), triples_tested=tested,
                         worst_triple=worst_triple)


def delta_from_matrix(sample, ell: EllMatrix, n_triples=2000, rng=None,
                      structured=True, min_triples=100) -> DeltaEstimate:
    """Defect estimate over a sample, from its precomputed reading matrix.

    Random index triples plus, for ray samples, the symmetric collinear
    triples (i-k, i, i+k) that realize the worst defect of a separation-
    monotone log-scale.
    """
    rng = np.random.default_rng(rng)
    n = len(sample)
    if n < 3:
        raise InsufficientData("sample too small for triples")
    idx = rng.integers(0, n, size=(n_triples, 3))
    idx = idx[(idx[:, 0] != idx[:, 1]) & (idx[:, 1] != idx[:, 2]) & (idx[:, 0] != idx[:, 2])]
    triples = [tuple(row) for row in idx]
    if structured:
        for mid in {n // 2, n // 4, (3 * n) // 4}:
            for k in range(1, min(mid, n - 1 - mid) + 1):
                triples.append((mid - k, mid, mid + k))
    finite = ell.finite_offdiag()
    entries = []
    vals = ell.values
    pts = sample.points
    for i, j, k in triples:
        if finite[i, j] and finite[j, k] and finite[i, k]:
            entries.append(
                ((pts[i], pts[j], pts[k]),
                 (float(vals[i, j]), float(vals[j, k]), float(vals[i, k])))
            )
    return estimate_delta(entries, min_triples=min_triples)


# ---------------------------------------------------------------------------
# subsequence extraction


@dataclass
class SubsequenceResult:
    points: list
    indices: list
    degenerate: bool
    bound_violations: int = 0


def subsequence_extract(ell_oracle, seq, n0, delta) -> SubsequenceResult:
    """Greedy subsequence with consecutive readings in [n0 - 2*delta, n0).

    ell_oracle(a, b) returns the log-scale of a pair of points.  Interior
    consecutive pairs of the output satisfy n0 - 2*delta <= ell < n0,
    except in the degenerate case where the two endpoints already satisfy
    ell >= n0 (flagged, output is just the endpoints).
    """
    seq = list(seq)
    if len(seq) < 2:
        raise ValidationError("need at least two points")
    m = len(seq) - 1
    for i in range(m):
        if ell_oracle(seq[i], seq[i + 1]) < n0:
            raise ValidationError(
                "consecutive readings must be >= n0 along the input sequence"
            )

    indices = [0]
    r = 0
    degenerate = False
    while r < m:
        s = r + 1
        for t in range(m, r, -1):
            if ell_oracle(seq[r], seq[t]) >= n0:
                s = t
                break
        if s < m:
            indices.append(s + 1)
            r = s + 1
        else:
            # endgame: the current tail reaches x_m directly
            if len(indices) == 1:
                indices.append(m)
                degenerate = True
            else:
                indices[-1] = m
            break

    points = [seq[i] for i in indices]
    violations = 0
    if not degenerate:
        for a, b in zip(indices, indices[1:]):
            val = ell_oracle(seq[a], seq[b])
            if not (n0 - 2 * delta <= val < n0):
                violations += 1
    return SubsequenceResult(points, indices, degenerate, violations)
