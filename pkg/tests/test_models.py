"""System models: iteration, metric, bracket, and leaf samples."""

import math

import numpy as np
import pytest

from smalekit import models
from smalekit.errors import Oversize, ValidationError

GOLDEN = (1 + math.sqrt(5)) / 2  # 1.618034


def test_cat_fixed_point_iterates_to_itself(cat):
    p = np.zeros(2)
    assert np.allclose(models.iterate(cat, p, 5), p)


def test_cat_iterate_one_step_matches_hand_product(cat):
    # (2*0.1 + 0.2, 0.1 + 0.2) mod 1
    out = models.iterate(cat, [0.1, 0.2], 1)
    assert np.allclose(out, [0.4, 0.3], atol=1e-12)


def test_iterate_composes_additively(cat):
    rng = np.random.default_rng(0)
    for _ in range(20):
        p = rng.random(2)
        a, b = int(rng.integers(-6, 7)), int(rng.integers(-6, 7))
        lhs = models.iterate(cat, models.iterate(cat, p, a), b)
        rhs = models.iterate(cat, p, a + b)
        assert models.dist(cat, lhs, rhs) < 1e-12


def test_shift_iterate_moves_origin(full_shift):
    base = models.make_point(full_shift, (0,), (1,), (0,))
    moved = models.iterate(full_shift, base, 2)
    assert moved.symbol_at(-2) == 1
    assert all(moved.symbol_at(k) == 0 for k in (-1, 0, 1, 5, -5))


def test_torus_distance_wraps(cat):
    assert models.dist(cat, [0.95, 0.0], [0.05, 0.0]) == pytest.approx(0.1)


def test_distance_of_point_to_itself_is_zero(cat, full_shift):
    assert models.dist(cat, [0.3, 0.7], [0.3, 0.7]) == 0.0
    p = models.make_point(full_shift, (0,), (0, 1), (1,))
    assert models.dist(full_shift, p, p) == 0.0


def test_shift_distance_uses_first_disagreement(full_shift):
    x = models.make_point(full_shift, (0,), (0,), (0,))
    # one 1 at index +3
    y = models.make_point(full_shift, (0,), (0, 0, 0, 1), (0,), origin=0)
    assert models.dist(full_shift, x, y) == pytest.approx(0.125)


def test_bracket_is_identity_on_equal_points(cat, full_shift):
    p = np.array([0.42, 0.13])
    assert np.allclose(models.bracket(cat, p, p), p)
    q = models.make_point(full_shift, (0,), (1,), (0,))
    assert models.points_equal(full_shift, models.bracket(full_shift, q, q), q)


def test_bracket_fixes_stable_plaque_points(cat):
    v_stable = models.leaf_directions(cat, "stable")[0]
    x = np.array([0.2, 0.6])
    y = np.mod(x + 0.01 * v_stable, 1.0)
    assert models.dist(cat, models.bracket(cat, x, y), x) < 1e-9


def test_bracket_eigenbasis_decomposition(cat):
    v_stable = models.leaf_directions(cat, "stable")[0]
    v_unstable = models.leaf_directions(cat, "unstable")[0]
    assert np.allclose(v_stable, np.array([1.0, -GOLDEN]) / np.hypot(1, GOLDEN), atol=1e-6)
    assert np.allclose(v_unstable, np.array([1.0, GOLDEN - 1]) / np.hypot(1, GOLDEN - 1),
                       atol=1e-6)
    x = np.zeros(2)
    y = np.mod(0.001 * v_stable + 0.001 * v_unstable, 1.0)
    out = models.bracket(cat, x, y)
    assert models.dist(cat, out, np.mod(0.001 * v_unstable, 1.0)) < 1e-9


def test_bracket_outside_radius_is_undefined(cat):
    assert models.bracket(cat, [0.0, 0.0], [0.4, 0.4]) is None


def test_shift_bracket_merges_halves(full_shift):
    x = models.make_point(full_shift, (0,), (0, 1, 0), (0,), origin=2)  # 1 at -1
    y = models.make_point(full_shift, (0,), (0, 1), (0,), origin=0)  # 1 at +1
    out = models.bracket(full_shift, x, y)
    assert out.symbol_at(-1) == 1 and out.symbol_at(1) == 1
    assert out.symbol_at(0) == 0 and out.symbol_at(2) == 0 and out.symbol_at(-2) == 0


def test_shift_bracket_undefined_when_origins_differ(full_shift):
    x = models.make_point(full_shift, (0,), (0,), (0,))
    y = models.make_point(full_shift, (0,), (1,), (0,))
    assert models.bracket(full_shift, x, y) is None


def test_bracket_axioms_on_random_triples(cat):
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(300):
        x = rng.random(2)
        y = np.mod(x + (rng.random(2) - 0.5) * 0.05, 1.0)
        z = np.mod(x + (rng.random(2) - 0.5) * 0.05, 1.0)
        xy = models.bracket(cat, x, y)
        yz = models.bracket(cat, y, z)
        xz = models.bracket(cat, x, z)
        if xy is None or yz is None or xz is None:
            continue
        lhs1 = models.bracket(cat, xy, z)
        lhs2 = models.bracket(cat, x, yz)
        if lhs1 is None or lhs2 is None:
            continue
        checked += 1
        assert models.dist(cat, lhs1, xz) < 1e-9
        assert models.dist(cat, lhs2, xz) < 1e-9
    assert checked > 100


def test_expansivity_on_random_pairs(cat, cfg):
    rng = np.random.default_rng(1)
    for _ in range(1000):
        x, y = rng.random(2), rng.random(2)
        separated = any(
            models.orbit_distance(cat, x, y, n) > cfg.epsilon0
            or models.orbit_distance(cat, x, y, -n) > cfg.epsilon0
            for n in range(cfg.n_max + 1)
        )
        assert separated


def test_stable_contraction_with_small_constant(cat):
    rng = np.random.default_rng(2)
    lam = cat.spectral_split.lambda_max
    v = models.leaf_directions(cat, "stable")[0]
    for _ in range(30):
        x = rng.random(2)
        s = 0.01 + rng.random() * 0.09
        y = np.mod(x + s * v, 1.0)
        d0 = models.dist(cat, x, y)
        for n in range(0, 21):
            dn = models.orbit_distance(cat, x, y, n)
            if dn <= 64 * np.finfo(float).eps / lam**n:
                continue
            assert dn <= 2.0 * lam**n * d0


def test_leaf_sample_ray_matches_eigendirection(cat):
    sample = models.leaf_sample(cat, np.zeros(2), "stable", window=0.2, spacing=0.1)
    assert len(sample) == 5
    assert np.allclose(sample.params, [-0.2, -0.1, 0.0, 0.1, 0.2])
    v = models.leaf_directions(cat, "stable")[0]
    expected = np.mod(np.outer(sample.params, v), 1.0)
    assert np.allclose(sample.coords(), expected)


def test_leaf_sample_zero_window_is_single_point(cat, full_shift):
    s = models.leaf_sample(cat, [0.3, 0.4], "stable", window=0.0, spacing=0.1)
    assert len(s) == 1 and np.allclose(s.coords()[0], [0.3, 0.4])
    base = models.default_base(full_shift)
    s2 = models.leaf_sample(full_shift, base, "stable", depth=0)
    assert len(s2) == 1


def test_full_shift_stable_depth2_enumerates_four_words(full_shift):
    base = models.default_base(full_shift)
    sample = models.leaf_sample(full_shift, base, "stable", depth=2)
    assert len(sample) == 4
    words = sorted(tuple(p.symbol_at(k) for k in (-2, -1)) for p in sample.points)
    assert words == [(0, 0), (0, 1), (1, 0), (1, 1)]
    # all agree with the base on k >= 0
    for p in sample.points:
        assert all(p.symbol_at(k) == base.symbol_at(k) for k in range(0, 6))


def test_golden_mean_sample_respects_transitions(golden_shift):
    base = models.default_base(golden_shift)
    sample = models.leaf_sample(golden_shift, base, "stable", depth=3)
    for p in sample.points:
        for k in range(-5, 5):
            assert golden_shift.allowed(p.symbol_at(k), p.symbol_at(k + 1))


def test_sample_points_lie_on_the_leaf(cat):
    sample = models.leaf_sample(cat, [0.1, 0.9], "stable", window=0.05, spacing=0.01)
    for p in sample.points:
        out = models.bracket(cat, sample.base_point, p)
        assert models.dist(cat, out, sample.base_point) < 1e-9
    unstable = models.leaf_sample(cat, [0.1, 0.9], "unstable", window=0.05,
                                  spacing=0.01)
    for p in unstable.points:
        out = models.bracket(cat, unstable.base_point, p)
        assert models.dist(cat, out, p) < 1e-9


def test_sample_budget_enforced(cat):
    with pytest.raises(Oversize):
        models.leaf_sample(cat, np.zeros(2), "stable", window=1.0, spacing=1e-8)


def test_4torus_grid_sample(torus4):
    sample = models.leaf_sample(torus4, np.zeros(4), "stable", window=0.02,
                                spacing=0.01)
    assert sample.kind == "grid"
    assert len(sample) == 25
    p_minus = torus4.spectral_split.p_minus
    for off in sample.offsets:
        assert np.linalg.norm(p_minus @ off) < 1e-9


def test_load_system_round_trip(tmp_path):
    doc = {"type": "torus", "matrix": [[2, 1], [1, 1]], "bracket_radius": 0.05}
    system = models.load_system(doc)
    assert system.kind == "torus" and system.bracket_radius == 0.05
    sft = models.load_system(
        {"type": "sft", "alphabet": 2, "transitions": [[1, 1], [1, 1]], "kappa": 0.6931}
    )
    assert sft.kind == "sft" and sft.symbol_decay == pytest.approx(0.6931)
    with pytest.raises(ValidationError):
        models.load_system({"type": "nope"})
    with pytest.raises(ValidationError):
        models.load_system({"type": "sft", "alphabet": 2})


def test_non_irreducible_transitions_rejected():
    with pytest.raises(ValidationError):
        models.ShiftSystem(alphabet_size=2, transitions=np.array([[1, 1], [0, 1]]))


def test_symbolic_point_validates_seams(golden_shift):
    with pytest.raises(ValidationError):
        models.make_point(golden_shift, (1,), (1,), (0,))  # 1 -> 1 forbidden
