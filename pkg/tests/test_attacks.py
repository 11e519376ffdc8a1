import numpy as np
import pytest

import qshield.nn as nn
from qshield.attacks import (
    AttackConfig,
    _spsa_gradient,
    craft,
    craft_set,
    evaluate_under_attack,
    fgsm,
    gradient_attack,
    make_grad_oracle,
    make_loss_oracle,
    pgd_l2,
    project_l1,
    sparse_l1_descent,
    spsa,
)
from qshield.data import FeatureSet, synth_gaussian
from qshield.nn import TrainConfig, accuracy, build_model, train


def linear_grad_oracle(c):
    c = np.asarray(c, dtype=float)
    return lambda x, label: (float(c @ x), c.copy())


def linear_loss_oracle(c):
    c = np.asarray(c, dtype=float)

    def oracle(points, label):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            return float(c @ pts)
        return pts @ c

    return oracle


def quadratic_loss_oracle(points, label):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        return float(pts @ pts)
    return np.einsum("bd,bd->b", pts, pts)


def random_model_and_point(seed, kind="classical"):
    rng = np.random.default_rng(seed)
    model = build_model(kind, 6, 2, n_qubits=3, n_layers=1, rng=rng)
    x = rng.normal(size=6)
    label = int(rng.integers(2))
    return model, x, label


# --------------------------------------------------------- gradient attack

def test_gradient_attack_normalizes():
    x = np.zeros(2)
    adv = gradient_attack(linear_grad_oracle([3.0, 4.0]), x, 0, eps=1.0)
    assert np.allclose(adv, [0.6, 0.8], atol=1e-12)


def test_gradient_attack_zero_eps_is_noop():
    x = np.array([1.0, 2.0])
    adv = gradient_attack(linear_grad_oracle([3.0, 4.0]), x, 0, eps=0.0)
    assert np.array_equal(adv, x)


def test_gradient_attack_zero_gradient_is_noop():
    x = np.array([1.0, 2.0])
    adv = gradient_attack(linear_grad_oracle([0.0, 0.0]), x, 0, eps=0.5)
    assert np.array_equal(adv, x)


def test_gradient_attack_rejects_non_finite():
    with pytest.raises(ValueError, match="non-finite"):
        gradient_attack(linear_grad_oracle([np.nan, 1.0]), np.zeros(2), 0, eps=0.1)


def test_gradient_attack_respects_l2_ball():
    rng = np.random.default_rng(1)
    for seed in range(10):
        model, x, label = random_model_and_point(seed)
        eps = float(rng.uniform(0.01, 2.0))
        adv = gradient_attack(make_grad_oracle(model), x, label, eps)
        assert np.linalg.norm(adv - x) <= eps + 1e-9


def test_gradient_attack_increases_loss():
    # first-order ascent holds on nearly all smooth draws (relu6 kinks
    # may break a few); seed pinned for reproducibility
    wins = 0
    for seed in range(100):
        model, x, label = random_model_and_point(seed)
        oracle = make_grad_oracle(model)
        adv = gradient_attack(oracle, x, label, eps=1e-4)
        wins += oracle(adv, label)[0] >= oracle(x, label)[0]
    assert wins >= 95


# -------------------------------------------------------------------- fgsm

def test_fgsm_sign_step():
    adv = fgsm(linear_grad_oracle([0.3]), np.array([0.5]), 0, eps=0.1)
    assert np.allclose(adv, [0.6], atol=1e-12)


def test_fgsm_sign_of_zero_component():
    adv = fgsm(linear_grad_oracle([0.0, -2.0]), np.zeros(2), 0, eps=0.05)
    assert np.array_equal(adv, [0.0, -0.05])


def test_fgsm_components_are_zero_or_eps():
    rng = np.random.default_rng(0)
    for seed in range(10):
        model, _, label = random_model_and_point(seed)
        # integer coordinates keep x + 0.25 exactly representable, so
        # the membership check can be equality rather than tolerance
        x = rng.integers(-3, 4, size=6).astype(float)
        adv = fgsm(make_grad_oracle(model), x, label, eps=0.25)
        moved = np.abs(adv - x)
        assert np.all((moved == 0.0) | (moved == 0.25))
        assert np.max(moved) <= 0.25


# ------------------------------------------------------------------ pgd_l2

def test_pgd_projection_lands_on_sphere():
    # a huge step size forces every iterate outside the ball
    x = np.zeros(4)
    adv = pgd_l2(linear_grad_oracle([1.0, 0.0, 0.0, 0.0]), x, 0, eps=0.3,
                 step_size=10.0, n_iter=3, seed=5)
    assert abs(np.linalg.norm(adv - x) - 0.3) < 1e-12


def test_pgd_degenerate_config_is_noop():
    x = np.array([1.0, -2.0])
    adv = pgd_l2(linear_grad_oracle([1.0, 1.0]), x, 0, eps=0.5,
                 step_size=0.0, n_iter=1, seed=0, random_start=False)
    assert np.array_equal(adv, x)


def test_pgd_respects_l2_ball():
    rng = np.random.default_rng(3)
    for seed in range(10):
        model, x, label = random_model_and_point(seed)
        eps = float(rng.uniform(0.05, 1.5))
        adv = pgd_l2(make_grad_oracle(model), x, label, eps, n_iter=10, seed=seed)
        assert np.linalg.norm(adv - x) <= eps + 1e-9


def test_pgd_seed_determinism():
    model, x, label = random_model_and_point(7)
    oracle = make_grad_oracle(model)
    a = pgd_l2(oracle, x, label, eps=0.5, n_iter=5, seed=42)
    b = pgd_l2(oracle, x, label, eps=0.5, n_iter=5, seed=42)
    c = pgd_l2(oracle, x, label, eps=0.5, n_iter=5, seed=43)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_pgd_multi_step_dominates_single_step():
    # seed range 0..19 pinned.  The comparison starts from x itself:
    # the random start lands the iterate near the sphere and radial
    # projection then approaches the pole only geometrically, leaving
    # a ~1e-3 shortfall against the full-radius single step on losses
    # that are nearly linear inside the ball.
    wins = 0
    for seed in range(20):
        model, x, label = random_model_and_point(seed)
        oracle = make_grad_oracle(model)
        eps = 0.5
        multi = pgd_l2(oracle, x, label, eps, n_iter=10, seed=seed,
                       random_start=False)
        single = gradient_attack(oracle, x, label, eps)
        # 1e-12 absorbs float noise when both land on the same pole
        wins += oracle(multi, label)[0] >= oracle(single, label)[0] - 1e-12
    assert wins >= 16


# --------------------------------------------------------------- sparse L1

def test_project_l1_dominant_coordinate():
    assert np.allclose(project_l1(np.array([3.0, 1.0]), 1.0), [1.0, 0.0], atol=1e-12)


def test_project_l1_matches_brute_force_grid():
    rng = np.random.default_rng(9)
    grid = np.linspace(-2.0, 2.0, 401)
    gx, gy = np.meshgrid(grid, grid)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    for _ in range(5):
        v = rng.uniform(-2, 2, size=2)
        radius = float(rng.uniform(0.2, 1.5))
        feasible = points[np.abs(points).sum(axis=1) <= radius]
        best = feasible[np.argmin(((feasible - v) ** 2).sum(axis=1))]
        exact = project_l1(v, radius)
        # the grid is 0.01-spaced, so agree within one cell diagonal
        assert np.linalg.norm(exact - best) < 0.015
        assert np.abs(exact).sum() <= radius + 1e-12


def test_project_l1_inside_ball_is_identity():
    v = np.array([0.1, -0.2, 0.05])
    assert np.array_equal(project_l1(v, 1.0), v)


def test_project_l1_is_optimal_feasible_point():
    rng = np.random.default_rng(4)
    for _ in range(20):
        d = int(rng.integers(2, 8))
        v = rng.normal(size=d) * 2
        radius = float(rng.uniform(0.1, 2.0))
        p = project_l1(v, radius)
        assert np.abs(p).sum() <= radius + 1e-9
        for _ in range(50):
            w = rng.normal(size=d)
            w = w / max(np.abs(w).sum(), 1e-12) * radius * rng.uniform()
            assert np.linalg.norm(v - p) <= np.linalg.norm(v - w) + 1e-9


def test_sparse_perturbs_only_dominant_component():
    g = np.zeros(10)
    g[3] = 5.0
    g[7] = 0.01
    oracle = lambda x, label: (0.0, g)
    x = np.zeros(10)
    adv = sparse_l1_descent(oracle, x, 0, eps=0.5, n_iter=1,
                            step_size=0.1, sparsity_quantile=0.99)
    moved = np.nonzero(adv - x)[0]
    assert np.array_equal(moved, [3])


def test_sparse_ties_all_kept():
    g = np.full(4, 2.0)
    oracle = lambda x, label: (0.0, g)
    adv = sparse_l1_descent(oracle, np.zeros(4), 0, eps=1.0, n_iter=1,
                            step_size=0.4, sparsity_quantile=0.5)
    # all four tie at the threshold, so each gets step/4
    assert np.allclose(adv, np.full(4, 0.1), atol=1e-12)


def test_sparse_respects_l1_ball():
    rng = np.random.default_rng(6)
    for seed in range(10):
        model, x, label = random_model_and_point(seed)
        eps = float(rng.uniform(0.05, 1.5))
        adv = sparse_l1_descent(make_grad_oracle(model), x, label, eps, n_iter=10)
        assert np.abs(adv - x).sum() <= eps + 1e-9


# -------------------------------------------------------------------- spsa

def test_spsa_estimate_exact_on_1d_linear():
    for c in (-3.0, 0.5, 7.0):
        rng = np.random.default_rng(0)
        ghat = _spsa_gradient(linear_loss_oracle([c]), np.array([2.0]), 0,
                              delta=0.01, samples=1, rng=rng)
        assert ghat[0] == pytest.approx(c, abs=1e-9)


def test_spsa_estimate_direction_quadratic():
    # at x = [1, 1] the true gradient is [2, 2]; the estimate should
    # point the same way in nearly every seeded trial
    hits = 0
    x = np.array([1.0, 1.0])
    for seed in range(100):
        rng = np.random.default_rng(seed)
        ghat = _spsa_gradient(quadratic_loss_oracle, x, 0, delta=0.01,
                              samples=32, rng=rng)
        hits += float(ghat @ np.array([2.0, 2.0])) > 0
    assert hits >= 95


def test_spsa_respects_linf_ball():
    rng = np.random.default_rng(2)
    for seed in range(5):
        model, x, label = random_model_and_point(seed)
        eps = float(rng.uniform(0.05, 1.0))
        adv = spsa(make_loss_oracle(model), x, label, eps, n_iter=5,
                   spsa_samples=8, seed=seed)
        assert np.max(np.abs(adv - x)) <= eps + 1e-15


def test_spsa_seed_determinism():
    model, x, label = random_model_and_point(11)
    oracle = make_loss_oracle(model)
    a = spsa(oracle, x, label, 0.3, n_iter=3, spsa_samples=4, seed=9)
    b = spsa(oracle, x, label, 0.3, n_iter=3, spsa_samples=4, seed=9)
    c = spsa(oracle, x, label, 0.3, n_iter=3, spsa_samples=4, seed=10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_spsa_never_touches_gradients(monkeypatch):
    calls = {"backward": 0}
    real = nn.model_backward_batch

    def counting(*args, **kwargs):
        calls["backward"] += 1
        return real(*args, **kwargs)

    monkeypatch.setattr(nn, "model_backward_batch", counting)
    model, x, label = random_model_and_point(1)
    test_set = FeatureSet(np.tile(x, (3, 1)), np.full(3, label), 2)
    evaluate_under_attack(model, test_set,
                          AttackConfig("spsa", 0.3, n_iter=2, spsa_samples=4, seed=0))
    assert calls["backward"] == 0

    evaluate_under_attack(model, test_set, AttackConfig("fgsm", 0.3, seed=0))
    assert calls["backward"] > 0


def test_spsa_rejects_non_finite_loss():
    def bad_oracle(points, label):
        pts = np.asarray(points, float)
        return np.full(pts.shape[0], np.nan)

    with pytest.raises(ValueError, match="non-finite"):
        spsa(bad_oracle, np.zeros(2), 0, eps=0.1, n_iter=1, spsa_samples=2, seed=0)


# ------------------------------------------------------------------ config

def test_attack_config_validation():
    with pytest.raises(ValueError, match="method"):
        AttackConfig("warp", 0.1)
    with pytest.raises(ValueError, match="eps"):
        AttackConfig("fgsm", -0.1)
    with pytest.raises(ValueError, match="n_iter"):
        AttackConfig("pgd_l2", 0.1, n_iter=0)
    with pytest.raises(ValueError, match="quantile"):
        AttackConfig("sparse_l1", 0.1, sparsity_quantile=1.0)
    with pytest.raises(ValueError, match="spsa_delta"):
        AttackConfig("spsa", 0.1, spsa_delta=0.0)
    with pytest.raises(ValueError, match="seed"):
        AttackConfig("fgsm", 0.1, seed=-1)


# -------------------------------------------------------------- evaluation

def constant_class0_model():
    return nn.HybridModel(
        "classical",
        nn.DenseLayer(np.zeros((2, 3)), np.zeros(2)),
        None,
        nn.DenseLayer(np.zeros((2, 2)), np.array([1.0, 0.0])),
    )


def test_evaluate_none_constant_predictor():
    labels = np.array([0, 0, 0, 1, 1])  # 60% class 0
    test_set = FeatureSet(np.random.default_rng(0).normal(size=(5, 3)), labels, 2)
    acc = evaluate_under_attack(constant_class0_model(), test_set,
                                AttackConfig("none", 0.0))
    assert acc == pytest.approx(0.6)


def test_evaluate_zero_eps_equals_clean():
    model, _, _ = random_model_and_point(3)
    fset = synth_gaussian(10, 6, 2, 2.0, seed=1)
    clean = evaluate_under_attack(model, fset, AttackConfig("none", 0.0))
    for method in ("gradient", "fgsm", "pgd_l2", "sparse_l1", "spsa"):
        assert evaluate_under_attack(model, fset, AttackConfig(method, 0.0)) == clean


def test_evaluate_per_sample_seeds_xor():
    model, _, _ = random_model_and_point(5)
    fset = synth_gaussian(4, 6, 2, 1.0, seed=2)
    config = AttackConfig("pgd_l2", 0.4, n_iter=3, seed=100)
    adv = craft_set(model, fset, config)
    for i in range(fset.n_samples):
        row = craft(model, fset.features[i], int(fset.labels[i]), config, seed=100 ^ i)
        assert np.array_equal(adv[i], row)


def test_evaluate_deterministic():
    model, _, _ = random_model_and_point(8)
    fset = synth_gaussian(6, 6, 2, 1.5, seed=4)
    config = AttackConfig("spsa", 0.5, n_iter=3, spsa_samples=4, seed=3)
    assert evaluate_under_attack(model, fset, config) == evaluate_under_attack(
        model, fset, config
    )


def test_evaluate_empty_test_set():
    model, _, _ = random_model_and_point(0)
    good = synth_gaussian(2, 6, 2, 1.0, seed=0)
    empty = FeatureSet.__new__(FeatureSet)
    empty.features = np.zeros((0, 6))
    empty.labels = np.zeros(0, dtype=int)
    empty.n_classes = 2
    with pytest.raises(ValueError, match="empty"):
        evaluate_under_attack(model, empty, AttackConfig("fgsm", 0.1))
    assert 0.0 <= evaluate_under_attack(model, good, AttackConfig("fgsm", 0.1)) <= 1.0


def test_attacks_hurt_trained_model():
    fset = synth_gaussian(40, 8, 2, 3.0, seed=7)
    model = build_model("classical", 8, 2, n_qubits=4, rng=np.random.default_rng(1))
    model, _ = train(model, fset, TrainConfig(epochs=15, batch_size=4, seed=0))
    clean = evaluate_under_attack(model, fset, AttackConfig("none", 0.0))
    attacked = evaluate_under_attack(model, fset, AttackConfig("fgsm", 1.0, seed=0))
    assert clean > 0.9
    assert attacked < clean
