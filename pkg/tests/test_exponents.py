"""Growth fits, critical exponents, pinched check, entropy comparisons."""

import math

import numpy as np
import pytest

from smalekit import exponents, leafgraph, logscale, models
from smalekit.errors import (
    InsufficientData,
    NonFiniteExponent,
    NotCodimensionOne,
    NotHyperbolic,
    TruncationDominated,
)

LOG_CAT = math.log((3 + math.sqrt(5)) / 2)  # 0.962424
LOG_A2 = math.log(2 + math.sqrt(3))  # 1.316958
TRIBONACCI = 1.839286755214161


def test_exact_exponential_series_fits_perfectly():
    series = [(n, math.exp(n)) for n in range(2, 9)]
    fit = exponents.growth_fit(series)
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_rounded_synthetic_series_recovers_slope():
    series = [(n, float(round(3 * math.exp(0.96 * n)))) for n in range(4, 11)]
    fit = exponents.growth_fit(series)
    assert 0.90 <= fit.slope <= 1.02


def test_constant_series_is_rejected():
    with pytest.raises(InsufficientData):
        exponents.growth_fit([(n, 1.0) for n in range(2, 12)])


def test_too_few_points_rejected():
    with pytest.raises(InsufficientData):
        exponents.growth_fit([(2, 4.0), (3, 9.0), (4, 30.0)])


def test_cat_exponents_near_log_golden_square(cat):
    cfg = exponents.ExponentConfig(
        logscale=logscale.LogScaleConfig(0.05, 40),
        window=0.2, spacing=1e-4, n_lo=2, n_hi=10,
    )
    lower, upper, diag = exponents.critical_exponents(cat, "stable", cfg)
    assert abs(lower - LOG_CAT) / LOG_CAT < 0.10
    assert abs(upper - LOG_CAT) / LOG_CAT < 0.10
    assert lower <= upper
    assert len(diag["slopes"]) >= 20


def test_epsilon_robustness_of_estimates(cat):
    base_cfg = exponents.ExponentConfig(
        logscale=logscale.LogScaleConfig(0.05, 40), window=0.12, n_lo=2, n_hi=8,
    )
    half_cfg = exponents.ExponentConfig(
        logscale=logscale.LogScaleConfig(0.025, 40), window=0.12, n_lo=2, n_hi=8,
    )
    lo_a, hi_a, diag_a = exponents.critical_exponents(cat, "stable", base_cfg)
    lo_b, hi_b, diag_b = exponents.critical_exponents(cat, "stable", half_cfg)
    spread = max(
        np.subtract(*np.percentile(diag_a["slopes"], [75, 25])),
        np.subtract(*np.percentile(diag_b["slopes"], [75, 25])),
        0.05,
    )
    assert abs(lo_a - lo_b) <= 3 * spread
    assert abs(hi_a - hi_b) <= 3 * spread


def test_exponents_bracket_the_spectrum(torus4):
    cfg = exponents.ExponentConfig(
        logscale=logscale.LogScaleConfig(0.05, 40), window=0.06, n_lo=2, n_hi=10,
    )
    lower, upper, _ = exponents.critical_exponents(torus4, "stable", cfg)
    tol = 0.15 * upper
    assert lower >= LOG_CAT - tol
    assert upper <= LOG_A2 + tol
    assert abs(lower - LOG_CAT) / LOG_CAT < 0.15
    assert abs(upper - LOG_A2) / LOG_A2 < 0.15


def test_shift_estimation_is_truncation_dominated(full_shift):
    cfg = exponents.ExponentConfig(
        logscale=logscale.LogScaleConfig(0.5, 40), depth=5, n_lo=2, n_hi=8,
        min_pairs=5,
    )
    with pytest.raises((TruncationDominated, InsufficientData)):
        exponents.critical_exponents(full_shift, "stable", cfg)


def test_pinched_check_arithmetic():
    rep = exponents.ExponentReport(1.0, 1.0, 1.0, 1.0, {}, 0.0)
    assert exponents.pinched_check(rep)["margin"] == pytest.approx(1.0)
    rep = exponents.ExponentReport(0.9624, 1.3170, 0.9624, 1.3170, {}, 0.0)
    assert exponents.pinched_check(rep)["margin"] == pytest.approx(0.4616, abs=1e-3)
    rep = exponents.ExponentReport(1.0, 3.0, 1.0, 3.0, {}, 0.0)
    out = exponents.pinched_check(rep)
    assert out["margin"] == pytest.approx(-1 / 3) and not out["pinched"]


def test_pinched_check_rejects_nonfinite():
    rep = exponents.ExponentReport(math.inf, 1.0, 1.0, 1.0, {}, 0.0)
    with pytest.raises(NonFiniteExponent):
        exponents.pinched_check(rep)


def test_entropy_oracle_values(cat, torus4):
    assert exponents.entropy_oracle(cat) == pytest.approx(0.962424, abs=1e-6)
    assert exponents.entropy_oracle(torus4) == pytest.approx(2.279382, abs=1e-5)
    with pytest.raises(NotHyperbolic):
        exponents.entropy_oracle(np.array([[1, 1], [0, 1]]))


def test_codim_one_on_cat(cat):
    cfg = exponents.ExponentConfig(
        logscale=logscale.LogScaleConfig(0.05, 40), window=0.2, spacing=1e-4,
        n_lo=2, n_hi=10,
    )
    out = exponents.codim_one_check(cat, "stable", cfg)
    assert out["relative_gap"] < 0.05
    assert out["eta_gap"] < 0.10


def test_codim_one_rejects_complex_stable_pair():
    # companion matrix of x^3 - x^2 - x - 1: one real expanding root, a
    # complex contracting pair
    m = np.array([[0, 1, 0], [0, 0, 1], [1, 1, 1]])
    system = models.ToralSystem(matrix=m)
    with pytest.raises(NotCodimensionOne):
        exponents.codim_one_check(system, "stable")
    eta = exponents.entropy_oracle(system)
    assert eta == pytest.approx(math.log(TRIBONACCI), abs=1e-9)


def test_codim_one_rejects_shift(full_shift):
    with pytest.raises(NotCodimensionOne):
        exponents.codim_one_check(full_shift, "stable")


def test_single_upper_constant_generalizes_to_held_out_pairs(cat):
    # one (C, alpha) pair fitted on training pairs bounds d_n above on
    # held-out pairs
    cfg = logscale.LogScaleConfig(epsilon0=0.05, n_max=40)
    sample = models.leaf_sample(cat, np.zeros(2), "stable", window=0.05,
                                spacing=2.5e-4)
    ell = logscale.ell_matrix(cat, sample, "stable", cfg)
    rng = np.random.default_rng(17)
    n_pts = len(sample)
    pairs = sorted(
        {(int(i), int(j)) for i, j in
         zip(rng.integers(0, n_pts, 120), rng.integers(0, n_pts, 120)) if i < j}
    )
    train = pairs[::2]
    test = pairs[1::2]
    levels = range(2, 6)
    sources = sorted({i for i, _ in pairs})
    src = {s: r for r, s in enumerate(sources)}
    dn = {}
    for n in levels:
        g = leafgraph.build_gamma(sample, ell, n)
        mat = leafgraph.distances_from(g, sources)
        for i, j in pairs:
            dn[(i, j, n)] = float(mat[src[i], j])
    alpha = math.log((3 + math.sqrt(5)) / 2) * 1.05
    c_fit = max(
        dn[(i, j, n)] * math.exp(-alpha * (n - float(ell.values[i, j])))
        for i, j in train
        for n in levels
        if math.isfinite(dn[(i, j, n)])
    )
    for i, j in test:
        lv = float(ell.values[i, j])
        for n in levels:
            d = dn[(i, j, n)]
            if math.isfinite(d):
                assert d <= c_fit * math.exp(alpha * (n - lv)) * (1 + 1e-9)


def test_universal_bound_helpers():
    assert exponents.universal_bound_ok(math.inf, 9, 1.0, 1.0)
    assert exponents.universal_bound_ok(8.0, 4, 1.0, 1.0)  # 8 >= 2^(4-1-2)=2
    assert not exponents.universal_bound_ok(1.0, 9, 1.0, 1.0)
    # ultrametric limit: finite distances only allowed up to the reading
    assert exponents.universal_bound_ok(3.0, 1, 2.0, 0.0)
    assert not exponents.universal_bound_ok(3.0, 5, 2.0, 0.0)
    assert exponents.universal_bound_ok(math.inf, 5, 2.0, 0.0)


def test_doubling_helper():
    assert exponents.doubling_ok(3.0, 5.0)
    assert not exponents.doubling_ok(3.0, 4.0)
    assert exponents.doubling_ok(math.inf, math.inf)
    assert not exponents.doubling_ok(math.inf, 7.0)
