"""Minimal numeric layer: products, nonlinearity, dropout, softmax, masked
cross-entropy, row standardization, and Adam, each with an explicit gradient
so the kernels can run hand-written backward passes. Everything is float64;
operations are pure given their inputs plus an explicit RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ShapeError, ValidationError


class Parameter:
    """Trainable matrix with its gradient and Adam moment buffers."""

    __slots__ = ("name", "value", "grad", "adam_m", "adam_v", "step_count")

    def __init__(self, value: np.ndarray, name: str = ""):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.adam_m = np.zeros_like(self.value)
        self.adam_v = np.zeros_like(self.value)
        self.step_count = 0

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name or 'unnamed'}, shape={self.value.shape})"


@dataclass
class AdamConfig:
    learning_rate: float = 0.01
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ConfigError("Adam betas must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ConfigError("Adam epsilon must be positive")
        if self.learning_rate < 0.0 or self.weight_decay < 0.0:
            raise ConfigError("learning rate and weight decay must be nonnegative")


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def spmm(s: sp.csr_matrix, d: np.ndarray) -> np.ndarray:
    """Sparse-dense product s @ d.

    Gradient contract: for L(out), dL/dd = s.T @ dL/dout (dL/ds is never
    needed here; the sparse side is always a constant operator).
    """
    if s.shape[1] != d.shape[0]:
        raise ShapeError(f"spmm inner dims disagree: {s.shape} x {d.shape}")
    return s @ d


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(upstream: np.ndarray, pre_activation: np.ndarray) -> np.ndarray:
    # subgradient 0 at exactly 0
    return upstream * (pre_activation > 0.0)


def dropout(x, p: float, training: bool, rng: np.random.Generator | None):
    """Inverted dropout; returns (output, scale_mask).

    In training, elements are kept with probability 1-p and scaled by
    1/(1-p); the returned mask already carries the scale and is reused by
    the backward pass. Identity (mask None) when evaluating or p == 0.
    Sparse inputs keep their sparsity pattern (dropping a structural zero
    is a no-op).
    """
    if not (0.0 <= p < 1.0):
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, None
    if rng is None:
        raise ConfigError("training-mode dropout needs an RNG")
    scale = 1.0 / (1.0 - p)
    if sp.issparse(x):
        keep = rng.random(x.data.shape) >= p
        out = x.copy()
        out.data = out.data * keep * scale
        mask = x.copy()
        mask.data = keep * scale
        return out, mask
    keep = rng.random(x.shape) >= p
    mask = keep * scale
    return x * mask, mask


def dropout_backward(upstream: np.ndarray, mask) -> np.ndarray:
    if mask is None:
        return upstream
    if sp.issparse(mask):
        return upstream * mask.toarray()
    return upstream * mask


def softmax_rows(h: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for stability."""
    shifted = h - h.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def masked_cross_entropy(z: np.ndarray, labels: np.ndarray, train_mask: np.ndarray):
    """Mean negative log-likelihood over masked rows of a probability matrix.

    Returns (loss, grad) where grad is with respect to the logits that
    produced z (softmax and cross-entropy fused): (z - onehot) / m on
    masked rows, zero elsewhere.
    """
    idx = np.flatnonzero(train_mask)
    if idx.size == 0:
        raise ConfigError("no nodes in the loss mask")
    y = labels[idx]
    if np.any(y < 0):
        raise ValidationError("masked node with unknown label (-1)")
    m = idx.size
    picked = z[idx, y]
    loss = -float(np.mean(np.log(np.maximum(picked, 1e-300))))
    grad = np.zeros_like(z)
    grad[idx] = z[idx]
    grad[idx, y] -= 1.0
    grad[idx] /= m
    return loss, grad


def row_standardize(x: np.ndarray) -> np.ndarray:
    """Per-row shift to mean 0 and scale to population std 1.

    Rows with std below 1e-8 (near-constant) map to all zeros.
    """
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, keepdims=True)  # population: divide by row width
    out = np.where(std >= 1e-8, (x - mean) / np.where(std >= 1e-8, std, 1.0), 0.0)
    return out


def adam_step(p: Parameter, cfg: AdamConfig):
    """One Adam update with bias correction; weight decay enters as an L2
    term added to the gradient before the moment updates."""
    g = p.grad
    if cfg.weight_decay != 0.0:
        g = g + cfg.weight_decay * p.value
    p.step_count += 1
    t = p.step_count
    p.adam_m[...] = cfg.beta1 * p.adam_m + (1.0 - cfg.beta1) * g
    p.adam_v[...] = cfg.beta2 * p.adam_v + (1.0 - cfg.beta2) * (g * g)
    m_hat = p.adam_m / (1.0 - cfg.beta1**t)
    v_hat = p.adam_v / (1.0 - cfg.beta2**t)
    p.value -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)


def finite_difference_check(
    loss_fn,
    params,
    h: float = 1e-5,
    max_coords_per_param: int = 20,
    seed: int = 0,
) -> float:
    """Compare analytic gradients (already stored in each Parameter's .grad)
    against central differences of loss_fn at sampled coordinates.

    loss_fn takes no arguments, reads the current parameter values, and must
    be deterministic (dropout off, fixed inputs). Returns the max over
    sampled coordinates of |analytic - numeric| / max(|analytic|, |numeric|,
    1e-8).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        flat_value = p.value.ravel()
        flat_grad = p.grad.ravel()
        size = flat_value.size
        if size <= max_coords_per_param:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=max_coords_per_param, replace=False)
        for c in coords:
            original = flat_value[c]
            flat_value[c] = original + h
            up = loss_fn()
            flat_value[c] = original - h
            down = loss_fn()
            flat_value[c] = original
            numeric = (up - down) / (2.0 * h)
            analytic = flat_grad[c]
            denom = max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst
