"""Metrics synthesized from a log-scale via weighted shortest paths,
the associated-metric sandwich diagnostics, and the codimension-one
arclength/measure comparison.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.csgraph as csgraph

from . import logscale, models
from .errors import InsufficientData, NotCodimensionOne, ValidationError


@dataclass
class SyntheticMetric:
    """Shortest-path metric with edge weights e^(-beta * ell)."""

    sample: models.LeafSample
    beta: float
    pairwise: np.ndarray = field(repr=False)


@dataclass
class SandwichFit:
    """Extremes of d * e^(beta * ell) over sample pairs."""

    c_lower: float
    c_upper: float
    violations: int = 0

    @property
    def ratio(self):
        return self.c_lower / self.c_upper


def synthesize_metric(sample, ell: logscale.EllMatrix, beta: float) -> SyntheticMetric:
    """All-pairs shortest path over the complete graph with edge weights
    e^(-beta * ell(i, j)); the finite-sample realization of the chain
    infimum.  Truncated readings enter at their floor n_max."""
    if beta <= 0:
        raise ValidationError("beta must be positive")
    vals = ell.values.astype(float)
    if ell.invalid.any():
        raise ValidationError("ell matrix must be finite off-diagonal")
    weights = np.exp(-beta * vals)
    np.fill_diagonal(weights, 0.0)
    pairwise = csgraph.shortest_path(weights, method="FW", directed=False)
    return SyntheticMetric(sample=sample, beta=beta, pairwise=pairwise)


def verify_sandwich(metric: SyntheticMetric, ell: logscale.EllMatrix, beta: float,
                    holdout_fraction: float = 0.0, rng=None) -> SandwichFit:
    """c_lower/c_upper are the extremes of d * e^(beta*ell) over pairs.

    With a train/test split, the extremes are fitted on the training
    pairs and violations counted on the held-out ones; without a split
    violations are zero by construction of the extremes.
    """
    iu, ju = np.triu_indices(len(metric.sample), k=1)
    ratios = metric.pairwise[iu, ju] * np.exp(beta * ell.values[iu, ju].astype(float))
    if holdout_fraction > 0:
        rng = np.random.default_rng(rng)
        test = rng.random(len(ratios)) < holdout_fraction
        train = ~test
        if not train.any() or not test.any():
            raise InsufficientData("split left an empty train or test set")
        c_lower = float(ratios[train].min())
        c_upper = float(ratios[train].max())
        violations = int(np.sum((ratios[test] < c_lower) | (ratios[test] > c_upper)))
    else:
        c_lower = float(ratios.min())
        c_upper = float(ratios.max())
        violations = 0
    return SandwichFit(c_lower=c_lower, c_upper=c_upper, violations=violations)


def deformation_violations(sample, ell: logscale.EllMatrix, beta_low: float,
                           beta_high: float, tol: float = 1e-9) -> int:
    """Count pairs violating d_{beta'} >= d_beta^(beta'/beta) for
    beta' = beta_low < beta_high = beta (target: zero)."""
    if not 0 < beta_low < beta_high:
        raise ValidationError("need 0 < beta_low < beta_high")
    m_low = synthesize_metric(sample, ell, beta_low).pairwise
    m_high = synthesize_metric(sample, ell, beta_high).pairwise
    iu, ju = np.triu_indices(len(sample), k=1)
    lhs = m_low[iu, ju]
    rhs = m_high[iu, ju] ** (beta_low / beta_high)
    return int(np.sum(lhs < rhs - tol))


def fit_scale_exponent(arclengths, ell_values):
    """Fit ell against -ln(arclength); returns (fitted_exponent, r2).

    The regression slope of ell on -ln(T) is 1/alpha for readings of the
    form ell = ln(eps0/T)/alpha, so the fitted exponent is 1/slope.
    """
    t = np.asarray(arclengths, dtype=float)
    y = np.asarray(ell_values, dtype=float)
    keep = (t > 0) & np.isfinite(y)
    if keep.sum() < 2:
        raise InsufficientData("need at least two finite readings")
    x = -np.log(t[keep])
    slope, intercept = np.polyfit(x, y[keep], 1)
    if slope <= 0:
        raise InsufficientData("log-scale readings do not grow with -ln(T)")
    resid = y[keep] - (slope * x + intercept)
    ss = float(np.sum((y[keep] - y[keep].mean()) ** 2))
    r2 = 1.0 if ss == 0 else 1.0 - float(np.sum(resid**2)) / ss
    return 1.0 / float(slope), r2


def leaf_measure_check(system, sample, config: logscale.LogScaleConfig,
                       eta: float = None) -> dict:
    """Codimension-one check: arclength is the leaf measure, so the
    log-scale against -ln(arclength) fits the entropy, and ball masses
    scale like r^(eta/alpha)."""
    if getattr(system, "kind", None) != "torus":
        raise NotCodimensionOne("leaf measure check needs a toral system")
    split = system.spectral_split
    dim = split.stable_dim if sample.side == "stable" else split.unstable_dim
    if dim != 1:
        raise NotCodimensionOne(f"{sample.side} subspace has dimension {dim}")
    if len(sample) < 3:
        raise InsufficientData("single-pair sample")
    if eta is None:
        from .exponents import entropy_oracle

        eta = entropy_oracle(system)

    ell = logscale.ell_matrix(system, sample, sample.side, config)
    mid = len(sample) // 2
    readings = ell.values[mid].astype(float)
    arcs = np.abs(sample.params - sample.params[mid])
    keep = (
        (arcs > 0)
        & ~ell.truncated[mid]
        & ~ell.invalid[mid]
    )
    if keep.sum() < 2:
        raise InsufficientData("not enough finite pairs for the regression")
    fitted, fit_r2 = fit_scale_exponent(arcs[keep], readings[keep])

    # ball-mass scaling under the metric e^(-alpha * ell)
    d_assoc = np.exp(-fitted * readings[keep])
    arc_mass_unit = abs(sample.params[1] - sample.params[0])
    radii = np.geomspace(d_assoc.min() * 1.5, d_assoc.max() / 1.5, 12)
    masses = np.array([np.sum(d_assoc <= r) * arc_mass_unit for r in radii])
    ok = masses > 0
    slope, _ = np.polyfit(np.log(radii[ok]), np.log(masses[ok]), 1)
    pred = np.polyval(np.polyfit(np.log(radii[ok]), np.log(masses[ok]), 1),
                      np.log(radii[ok]))
    ss = float(np.sum((np.log(masses[ok]) - np.log(masses[ok]).mean()) ** 2))
    scaling_r2 = 1.0 if ss == 0 else 1.0 - float(
        np.sum((np.log(masses[ok]) - pred) ** 2)
    ) / ss
    return {
        "fitted_exponent": float(fitted),
        "fit_r2": float(fit_r2),
        "scaling_slope": float(slope),
        "scaling_r2": float(scaling_r2),
        "eta": float(eta),
        "exponent_ratio": float(slope / (eta / fitted)),
    }
