"""Synthesized metrics, sandwich fits, and the arclength measure check."""

import itertools
import math

import numpy as np
import pytest

from smalekit import logscale, metrics, models
from smalekit.errors import InsufficientData, NotCodimensionOne
from oracles import chain_infimum


def _cat_metric_inputs(cat, window=0.1, spacing=1e-3):
    cfg = logscale.LogScaleConfig(epsilon0=0.05, n_max=40)
    sample = models.leaf_sample(cat, np.zeros(2), "stable", window=window,
                                spacing=spacing)
    ell = logscale.ell_matrix(cat, sample, "stable", cfg)
    return sample, ell


def test_two_point_sample_is_direct_edge(cat):
    cfg = logscale.LogScaleConfig(epsilon0=0.05, n_max=40)
    sample = models.leaf_sample(cat, np.zeros(2), "stable", window=0.01,
                                spacing=0.01)
    assert len(sample) == 3
    ell = logscale.ell_matrix(cat, sample, "stable", cfg)
    metric = metrics.synthesize_metric(sample, ell, beta=0.7)
    # adjacent endpoints: the one-hop chain through the middle point
    # cannot beat the direct edge unless it is genuinely shorter
    w = np.exp(-0.7 * ell.values.astype(float))
    np.fill_diagonal(w, 0)
    expect01 = min(w[0, 1], w[0, 2] + w[2, 1])
    assert metric.pairwise[0, 1] == pytest.approx(expect01, rel=1e-12)


def test_matches_brute_force_chain_infimum(cat):
    sample, ell = _cat_metric_inputs(cat, window=0.02, spacing=8e-3)
    assert len(sample) <= 6
    metric = metrics.synthesize_metric(sample, ell, beta=0.6)
    w = np.exp(-0.6 * ell.values.astype(float))
    np.fill_diagonal(w, 0.0)
    weights = w.tolist()
    for i, j in itertools.combinations(range(len(sample)), 2):
        assert metric.pairwise[i, j] == pytest.approx(
            chain_infimum(weights, i, j), rel=1e-12
        )


def test_ultrametric_readings_make_direct_edges_optimal(full_shift):
    cfg = logscale.LogScaleConfig(epsilon0=0.5, n_max=40)
    base = models.default_base(full_shift)
    sample = models.leaf_sample(full_shift, base, "stable", depth=2)
    ell = logscale.ell_matrix(full_shift, sample, "stable", cfg)
    beta = 0.2
    metric = metrics.synthesize_metric(sample, ell, beta)
    w = np.exp(-beta * ell.values.astype(float))
    np.fill_diagonal(w, 0.0)
    weights = w.tolist()
    for i, j in itertools.combinations(range(len(sample)), 2):
        direct = w[i][j]
        assert metric.pairwise[i, j] == pytest.approx(direct, rel=1e-12)
        assert chain_infimum(weights, i, j) == pytest.approx(direct, rel=1e-12)


def test_metric_axioms_and_upper_bound(cat):
    sample, ell = _cat_metric_inputs(cat, window=0.05, spacing=1e-3)
    beta = 0.5
    metric = metrics.synthesize_metric(sample, ell, beta)
    pw = metric.pairwise
    assert np.array_equal(pw, pw.T)
    assert np.all(np.diag(pw) == 0)
    off = ~np.eye(len(sample), dtype=bool)
    assert np.all(pw[off] > 0)
    direct = np.exp(-beta * ell.values.astype(float))
    np.fill_diagonal(direct, 0.0)
    assert np.all(pw <= direct)
    best = np.full_like(pw, np.inf)
    for k in range(len(sample)):
        np.minimum(best, pw[:, [k]] + pw[[k], :], out=best)
    assert float((pw - best).max()) <= 1e-12


def test_sandwich_of_exact_exponential_is_tight():
    # a sample whose chain metric is exactly e^(-beta * ell): two points
    sample = models.LeafSample("stable", None, [0, 1], np.arange(2.0))
    ell = logscale.EllMatrix(
        np.array([[40, 3], [3, 40]], dtype=np.int16), "stable", 0.05, 40
    )
    metric = metrics.synthesize_metric(sample, ell, beta=1.1)
    fit = metrics.verify_sandwich(metric, ell, beta=1.1)
    assert fit.c_lower == pytest.approx(1.0)
    assert fit.c_upper == pytest.approx(1.0)
    assert fit.violations == 0


def test_sandwich_healthy_below_critical_and_collapsed_above(cat):
    sample, ell = _cat_metric_inputs(cat, window=0.1, spacing=5e-4)
    a0 = math.log((3 + math.sqrt(5)) / 2)
    healthy = metrics.verify_sandwich(
        metrics.synthesize_metric(sample, ell, 0.5 * a0), ell, 0.5 * a0
    )
    assert healthy.ratio >= 1e-2
    collapsed = metrics.verify_sandwich(
        metrics.synthesize_metric(sample, ell, 3.0 * a0), ell, 3.0 * a0
    )
    assert collapsed.ratio < 1e-3


def test_holdout_split_reports_no_violations_on_consistent_data(cat):
    sample, ell = _cat_metric_inputs(cat, window=0.06, spacing=1e-3)
    beta = 0.45
    metric = metrics.synthesize_metric(sample, ell, beta)
    fit = metrics.verify_sandwich(metric, ell, beta, holdout_fraction=0.25, rng=3)
    assert fit.violations <= 2  # extremes fitted on train may be grazed


def test_monotone_deformation_no_violations(cat):
    sample, ell = _cat_metric_inputs(cat, window=0.06, spacing=1e-3)
    assert metrics.deformation_violations(sample, ell, 0.3, 0.9) == 0
    assert metrics.deformation_violations(sample, ell, 0.2, 1.5) == 0


def test_fit_scale_exponent_on_synthetic_halving_law():
    # readings ell(T) = floor(log2(eps0 / T)): the law of a leaf whose
    # arclength halves per iterate; fitted exponent must be ln 2
    eps0 = 0.05
    arcs = np.geomspace(1e-5, 0.04, 60)
    ells = np.floor(np.log2(eps0 / arcs))
    fitted, r2 = metrics.fit_scale_exponent(arcs, ells)
    assert fitted == pytest.approx(math.log(2), rel=0.03)
    assert r2 > 0.99


def test_leaf_measure_check_on_cat(cat, cfg):
    sample = models.leaf_sample(cat, np.zeros(2), "stable", window=0.2,
                                spacing=1e-4)
    out = metrics.leaf_measure_check(cat, sample, cfg)
    eta = 0.962424
    assert abs(out["fitted_exponent"] - eta) / eta < 0.10
    assert 0.87 <= out["fitted_exponent"] <= 1.06
    assert abs(out["exponent_ratio"] - 1.0) < 0.2
    assert out["scaling_r2"] > 0.9


def test_leaf_measure_check_insufficient_on_tiny_sample(cat, cfg):
    sample = models.leaf_sample(cat, np.zeros(2), "stable", window=0.0,
                                spacing=1e-3)
    with pytest.raises(InsufficientData):
        metrics.leaf_measure_check(cat, sample, cfg)


def test_leaf_measure_check_rejects_2d_stable_side(torus4, cfg):
    sample = models.leaf_sample(torus4, np.zeros(4), "stable", window=0.01,
                                spacing=5e-3)
    with pytest.raises(NotCodimensionOne):
        metrics.leaf_measure_check(torus4, sample, cfg)
