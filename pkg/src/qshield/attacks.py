"""Adversarial perturbations of feature vectors under norm budgets.

Two oracle shapes decouple the attacks from the model:

- grad oracle: callable(x, label) -> (loss, d_loss/d_x) for one 1-D x.
- loss oracle: callable(points, label) -> loss values; points may be a
  single vector (scalar result) or a stack of rows (vector result).
  The stacked form lets the black-box attack evaluate a whole batch of
  probe points in one call.

The SPSA attack accepts only a loss oracle, so gradient access is ruled
out by the interface itself.  eps is interpreted in whatever feature
space the oracle works in (the pipeline standardizes features first so
a budget means the same thing across datasets), and eps == 0 returns
the input unchanged for every method.

Per-sample crafting inside a test-set evaluation derives its seed as
base_seed XOR sample_index, so serial and parallel evaluation orders
agree bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn

METHODS = ("none", "gradient", "fgsm", "pgd_l2", "sparse_l1", "spsa")


@dataclass
class AttackConfig:
    """Attack method plus budget; None fields fall back to per-method defaults."""

    method: str
    eps: float
    n_iter: int | None = None
    step_size: float | None = None
    sparsity_quantile: float | None = None
    spsa_samples: int | None = None
    spsa_delta: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.eps < 0:
            raise ValueError(f"eps must be non-negative, got {self.eps}")
        if self.n_iter is not None and self.n_iter < 1:
            raise ValueError(f"n_iter must be positive, got {self.n_iter}")
        if self.step_size is not None and self.step_size < 0:
            raise ValueError(f"step_size must be non-negative, got {self.step_size}")
        if self.sparsity_quantile is not None and not 0 <= self.sparsity_quantile < 1:
            raise ValueError(f"sparsity_quantile must be in [0, 1), got {self.sparsity_quantile}")
        if self.spsa_samples is not None and self.spsa_samples < 1:
            raise ValueError(f"spsa_samples must be positive, got {self.spsa_samples}")
        if self.spsa_delta is not None and self.spsa_delta <= 0:
            raise ValueError(f"spsa_delta must be positive, got {self.spsa_delta}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


# ---------------------------------------------------------------- oracles

def make_grad_oracle(model):
    """White-box oracle: loss and input gradient from the model."""

    def oracle(x, label):
        loss, _, d_x = nn.model_backward(model, x, label)
        return loss, d_x

    return oracle


def make_loss_oracle(model):
    """Black-box oracle: loss only, accepting a vector or a stack of rows."""

    def oracle(points, label):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        batch = pts[None, :] if single else pts
        logits = nn.model_forward_batch(model, batch)
        labels = np.full(batch.shape[0], int(label))
        losses, _ = nn.softmax_cross_entropy_batch(logits, labels)
        return float(losses[0]) if single else losses

    return oracle


def _checked_grad(oracle, x, label):
    _, g = oracle(x, label)
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite gradient")
    return g


def _prepare(x, eps):
    arr = np.asarray(x, dtype=float)
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    return arr


# ----------------------------------------------------------------- attacks

def gradient_attack(oracle, x, label, eps):
    """Single L2-normalized gradient step of length eps."""
    x = _prepare(x, eps)
    if eps == 0:
        return x.copy()
    g = _checked_grad(oracle, x, label)
    norm = np.linalg.norm(g)
    if norm < 1e-12:
        return x.copy()
    return x + eps * g / norm


def fgsm(oracle, x, label, eps):
    """Single sign step: x + eps * sign(gradient)."""
    x = _prepare(x, eps)
    if eps == 0:
        return x.copy()
    g = _checked_grad(oracle, x, label)
    return x + eps * np.sign(g)


def pgd_l2(oracle, x, label, eps, step_size=None, n_iter=10, seed=0, random_start=True):
    """Projected gradient ascent inside the L2 ball of radius eps.

    Starts from a seeded uniform draw inside the ball (disable with
    random_start=False for the degenerate no-move configuration), takes
    normalized gradient steps, and radially projects after each one.
    """
    x = _prepare(x, eps)
    if eps == 0:
        return x.copy()
    if n_iter < 1:
        raise ValueError(f"n_iter must be positive, got {n_iter}")
    step_size = eps / 4 if step_size is None else step_size
    rng = np.random.default_rng(seed)
    if random_start:
        direction = rng.standard_normal(x.size)
        norm = np.linalg.norm(direction)
        # radius ~ eps * U^(1/d) makes the start uniform over the ball
        radius = eps * rng.uniform() ** (1.0 / x.size)
        cur = x + (direction / norm * radius if norm > 0 else 0.0)
    else:
        cur = x.copy()
    for _ in range(n_iter):
        g = _checked_grad(oracle, cur, label)
        g_norm = np.linalg.norm(g)
        if g_norm >= 1e-12:
            cur = cur + step_size * g / g_norm
        delta = cur - x
        dist = np.linalg.norm(delta)
        if dist > eps:
            cur = x + delta * (eps / dist)
    return cur


def project_l1(v, radius):
    """Euclidean projection of v onto the L1 ball of the given radius.

    Sorted-threshold method: find the largest k whose top-k magnitudes
    stay positive after subtracting the water level, then soft-threshold.
    """
    v = np.asarray(v, dtype=float)
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    mag = np.abs(v)
    if mag.sum() <= radius:
        return v.copy()
    top = np.sort(mag)[::-1]
    cum = np.cumsum(top)
    ks = np.arange(1, v.size + 1)
    keep = top - (cum - radius) / ks > 0
    k = ks[keep][-1]
    level = (cum[keep][-1] - radius) / k
    return np.sign(v) * np.maximum(mag - level, 0.0)


def sparse_l1_descent(oracle, x, label, eps, step_size=None, n_iter=10,
                      sparsity_quantile=0.8):
    """Iterative sign steps on the largest gradient components, L1-projected.

    Each step keeps components whose |gradient| reaches the
    sparsity_quantile threshold (ties included) and spreads step_size
    evenly over them.
    """
    x = _prepare(x, eps)
    if eps == 0:
        return x.copy()
    if not 0 <= sparsity_quantile < 1:
        raise ValueError(f"sparsity_quantile must be in [0, 1), got {sparsity_quantile}")
    if n_iter < 1:
        raise ValueError(f"n_iter must be positive, got {n_iter}")
    step_size = eps / 4 if step_size is None else step_size
    cur = x.copy()
    for _ in range(n_iter):
        g = _checked_grad(oracle, cur, label)
        mag = np.abs(g)
        threshold = np.quantile(mag, sparsity_quantile)
        mask = mag >= threshold
        kept = int(mask.sum())
        cur = cur + (step_size / kept) * np.sign(g) * mask
        delta = cur - x
        if np.abs(delta).sum() > eps:
            cur = x + project_l1(delta, eps)
    return cur


def _spsa_gradient(oracle, x, label, delta, samples, rng):
    """Two-sided simultaneous-perturbation estimate of the loss gradient."""
    r = rng.integers(0, 2, size=(samples, x.size)) * 2.0 - 1.0
    points = np.concatenate([x + delta * r, x - delta * r])
    losses = np.asarray(oracle(points, label), dtype=float)
    if not np.all(np.isfinite(losses)):
        raise ValueError("non-finite loss")
    diff = (losses[:samples] - losses[samples:]) / (2.0 * delta)
    # r is +-1 so multiplying by r is the same as dividing elementwise
    return np.einsum("s,sd->d", diff, r) / samples


def spsa(oracle, x, label, eps, n_iter=20, spsa_samples=32, spsa_delta=0.01,
         step_size=None, seed=0):
    """Black-box sign ascent with SPSA gradient estimates, L-inf budget."""
    x = _prepare(x, eps)
    if eps == 0:
        return x.copy()
    if n_iter < 1:
        raise ValueError(f"n_iter must be positive, got {n_iter}")
    if spsa_samples < 1:
        raise ValueError(f"spsa_samples must be positive, got {spsa_samples}")
    if spsa_delta <= 0:
        raise ValueError(f"spsa_delta must be positive, got {spsa_delta}")
    step_size = eps / 10 if step_size is None else step_size
    rng = np.random.default_rng(seed)
    cur = x.copy()
    for _ in range(n_iter):
        ghat = _spsa_gradient(oracle, cur, label, spsa_delta, spsa_samples, rng)
        cur = cur + step_size * np.sign(ghat)
        cur = x + np.clip(cur - x, -eps, eps)
    return cur


# -------------------------------------------------------------- evaluation

def craft(model, x, label, config: AttackConfig, seed=None):
    """Dispatch one sample to the configured attack with resolved defaults."""
    seed = config.seed if seed is None else seed
    x = np.asarray(x, dtype=float)
    if config.method == "none":
        return x.copy()
    eps = config.eps
    if config.method == "spsa":
        return spsa(
            make_loss_oracle(model), x, label, eps,
            n_iter=20 if config.n_iter is None else config.n_iter,
            spsa_samples=32 if config.spsa_samples is None else config.spsa_samples,
            spsa_delta=0.01 if config.spsa_delta is None else config.spsa_delta,
            step_size=config.step_size,
            seed=seed,
        )
    oracle = make_grad_oracle(model)
    if config.method == "gradient":
        return gradient_attack(oracle, x, label, eps)
    if config.method == "fgsm":
        return fgsm(oracle, x, label, eps)
    if config.method == "pgd_l2":
        return pgd_l2(
            oracle, x, label, eps,
            step_size=config.step_size,
            n_iter=10 if config.n_iter is None else config.n_iter,
            seed=seed,
        )
    return sparse_l1_descent(
        oracle, x, label, eps,
        step_size=config.step_size,
        n_iter=10 if config.n_iter is None else config.n_iter,
        sparsity_quantile=(
            0.8 if config.sparsity_quantile is None else config.sparsity_quantile
        ),
    )


def craft_set(model, test_set, config: AttackConfig) -> np.ndarray:
    """Adversarial counterpart of every test row, seeded per sample."""
    rows = [
        craft(model, test_set.features[i], int(test_set.labels[i]), config,
              seed=config.seed ^ i)
        for i in range(test_set.n_samples)
    ]
    return np.vstack(rows)


def evaluate_under_attack(model, test_set, config: AttackConfig) -> float:
    """Accuracy on attacked inputs; method "none" scores clean accuracy."""
    if test_set.n_samples == 0:
        raise ValueError("empty test set")
    if config.method == "none" or config.eps == 0:
        return nn.accuracy(model, test_set.features, test_set.labels)
    adv = craft_set(model, test_set, config)
    return float(np.mean(nn.predict(model, adv) == test_set.labels))
