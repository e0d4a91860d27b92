"""Spectral analysis of hyperbolic integer matrices.

Contracting/expanding splits, greedy lattice digit expansions and their
reconstruction, affine fixed points, and the Mather-spectrum inequality
comparators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DigitOutOfRange,
    NotHyperbolic,
    ValidationError,
)

UNIT_CIRCLE_TOL = 1e-9


def _as_int_matrix(matrix):
    m = np.asarray(matrix)
    mi = np.rint(m).astype(np.int64)
    if not np.allclose(m, mi, atol=1e-12):
        raise ValidationError("matrix entries must be integers")
    return mi


def int_inverse(matrix):
    """Exact integer inverse of a unimodular integer matrix."""
    mi = _as_int_matrix(matrix)
    det = int(round(np.linalg.det(mi.astype(float))))
    if abs(det) != 1:
        raise ValidationError(f"matrix must have |det| = 1, got {det}")
    inv = np.rint(np.linalg.inv(mi.astype(float))).astype(np.int64)
    if not np.array_equal(mi @ inv, np.eye(len(mi), dtype=np.int64)):
        raise ValidationError("failed to compute exact integer inverse")
    return inv


@dataclass
class SpectralSplit:
    """Contracting/expanding root-space decomposition of a hyperbolic matrix.

    e_plus_basis spans the contracting space (|lambda| < 1), e_minus_basis
    the expanding one; p_plus + p_minus = I and both commute with the
    matrix to within 1e-10.
    """

    matrix: np.ndarray
    e_plus_basis: np.ndarray
    e_minus_basis: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    stable_eigs: np.ndarray
    unstable_eigs: np.ndarray
    stable_block: np.ndarray = field(repr=False, default=None)
    unstable_block: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def stable_dim(self):
        return self.e_plus_basis.shape[1]

    @property
    def unstable_dim(self):
        return self.e_minus_basis.shape[1]

    @property
    def lambda_max(self):
        """Largest contracting eigenvalue modulus."""
        return float(np.max(np.abs(self.stable_eigs)))


def spectral_split(matrix) -> SpectralSplit:
    """Split R^d into contracting and expanding root subspaces.

    Uses a real Schur decomposition sorted inside/outside the unit
    circle, so the bases are real even for complex eigenvalue pairs.
    Raises NotHyperbolic when an eigenvalue sits on the unit circle
    (within 1e-9).
    """
    mi = _as_int_matrix(matrix)
    det = int(round(np.linalg.det(mi.astype(float))))
    if abs(det) != 1:
        raise ValidationError(f"matrix must have |det| = 1, got {det}")
    m = mi.astype(float)
    eigs = np.linalg.eigvals(m)
    if np.any(np.abs(np.abs(eigs) - 1.0) <= UNIT_CIRCLE_TOL):
        raise NotHyperbolic(f"eigenvalue on the unit circle: {eigs}")
    stable = eigs[np.abs(eigs) < 1.0]
    unstable = eigs[np.abs(eigs) > 1.0]
    if len(stable) == 0 or len(unstable) == 0:
        raise NotHyperbolic("matrix must have both contracting and expanding directions")

    _, z_plus, k_plus = scipy.linalg.schur(m, output="real", sort="iuc")
    _, z_minus, k_minus = scipy.linalg.schur(m, output="real", sort="ouc")
    e_plus = z_plus[:, :k_plus]
    e_minus = z_minus[:, :k_minus]

    basis = np.hstack([e_plus, e_minus])
    sel = np.zeros((m.shape[0], m.shape[0]))
    sel[: k_plus, : k_plus] = np.eye(k_plus)
    p_plus = basis @ sel @ np.linalg.inv(basis)
    p_minus = np.eye(m.shape[0]) - p_plus

    split = SpectralSplit(
        matrix=mi,
        e_plus_basis=e_plus,
        e_minus_basis=e_minus,
        p_plus=p_plus,
        p_minus=p_minus,
        stable_eigs=stable,
        unstable_eigs=unstable,
    )
    # Restrictions of the matrix to each subspace, in basis coordinates;
    # applying these repeatedly is numerically stable (no mixing of the
    # complementary, exponentially amplified direction).
    split.stable_block = np.linalg.lstsq(e_plus, m @ e_plus, rcond=None)[0]
    split.unstable_block = np.linalg.lstsq(e_minus, m @ e_minus, rcond=None)[0]
    return split


@dataclass
class DigitExpansion:
    """Greedy lattice expansion of a contracting-space point."""

    g0: np.ndarray
    digits: list
    target: np.ndarray

    def __len__(self):
        return len(self.digits)


def digit_expand(split: SpectralSplit, v, s_rad: int, n: int) -> DigitExpansion:
    """Greedy digit expansion of a point of the contracting space.

    Chooses lattice points h_k with v in phi^k(K) + h_k (K the open unit
    sup-norm cube) via the residual recursion r_k = phi^{-1}(r_{k-1}) - g_k
    with g_k the componentwise rounding (ties toward the smaller integer).
    Digits outside the sup-norm ball of radius s_rad raise DigitOutOfRange.
    """
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(split.p_minus @ v) > 1e-8:
        raise ValidationError("target must lie in the contracting subspace")
    phi_inv = int_inverse(split.matrix).astype(float)
    g0 = _round_half_down(v)
    r = v - g0
    digits = []
    for _ in range(n):
        r = phi_inv @ r
        g = _round_half_down(r)
        if np.max(np.abs(g)) > s_rad:
            raise DigitOutOfRange(
                f"digit {g.astype(int).tolist()} outside sup-norm radius {s_rad}"
            )
        digits.append(g.astype(np.int64))
        r = r - g
    return DigitExpansion(g0=g0.astype(np.int64), digits=digits, target=v)


def _round_half_down(x):
    # round to nearest, breaking exact .5 ties toward the smaller integer
    return np.ceil(np.asarray(x, dtype=float) - 0.5)


def reconstruct(split: SpectralSplit, expansion: DigitExpansion, n: int):
    """Contracting projection of the n-th partial sum of an expansion.

    Evaluates P+(phi^n(g_n) + ... + phi(g_1) + g_0) by Horner's scheme in
    contracting-space coordinates, which keeps every intermediate bounded.
    """
    if n > len(expansion.digits):
        raise ValidationError("n exceeds the digit count")
    b_plus = split.e_plus_basis
    coeff = [expansion.g0] + list(expansion.digits[:n])
    coords = [
        np.linalg.lstsq(b_plus, split.p_plus @ np.asarray(g, dtype=float), rcond=None)[0]
        for g in coeff
    ]
    acc = coords[-1]
    for c in reversed(coords[:-1]):
        acc = split.stable_block @ acc + c
    return b_plus @ acc


def affine_fixed_point(matrix, v0):
    """Solve w0 - phi(w0) = v0 for a hyperbolic integer matrix phi."""
    split = spectral_split(matrix)  # raises NotHyperbolic if needed
    m = split.matrix.astype(float)
    v0 = np.asarray(v0, dtype=float)
    w0 = np.linalg.solve(np.eye(len(m)) - m, v0)
    residual = np.linalg.norm(w0 - m @ w0 - v0)
    if residual > 1e-12:
        raise NotHyperbolic(f"fixed-point residual {residual:.3e} too large")
    return w0


@dataclass
class MatherBounds:
    """Extremes of the contracting/expanding Mather spectrum annuli."""

    lambda1: float
    lambda2: float
    mu2: float
    mu1: float

    def __post_init__(self):
        if not (0 < self.lambda1 <= self.lambda2 < 1 < self.mu2 <= self.mu1):
            raise ValidationError(
                "bounds must satisfy 0 < lambda1 <= lambda2 < 1 < mu2 <= mu1"
            )


def mather_check(bounds: MatherBounds) -> dict:
    """Evaluate the two Brin inequalities and the pinched-spectrum sum."""
    l1, l2 = math.log(bounds.lambda1), math.log(bounds.lambda2)
    m2, m1 = math.log(bounds.mu2), math.log(bounds.mu1)
    brin1 = 1.0 + m2 / m1 > l1 / l2
    brin2 = 1.0 + l2 / l1 > m1 / m2
    pinched_sum = l2 / l1 + m2 / m1
    return {"brin1": brin1, "brin2": brin2, "pinched_sum": pinched_sum}
