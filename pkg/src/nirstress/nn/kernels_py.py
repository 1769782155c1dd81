"""Pure-numpy kernel implementations (fallback twin of the compiled core).

Each function assumes clean, C-contiguous float64 inputs; validation lives
one level up in network.py. GEMM-bound kernels go through numpy's BLAS in
both backends — the compiled core only takes over where fused loops beat
vectorized temporaries.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

BACKEND_NAME = "python"


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Valid cross-correlation of [B, L] input with [K, W] kernels -> [B, Lo, K]."""
    batch, length = x.shape
    n_k, width = w.shape
    out_len = length - width + 1
    windows = as_strided(
        x,
        shape=(batch, out_len, width),
        strides=(x.strides[0], x.strides[1], x.strides[1]),
    )
    return windows @ w.T + b


def conv1d_backward(
    x: np.ndarray, w: np.ndarray, gout: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    batch, length = x.shape
    n_k, width = w.shape
    out_len = length - width + 1
    windows = as_strided(
        x,
        shape=(batch, out_len, width),
        strides=(x.strides[0], x.strides[1], x.strides[1]),
    )
    gb = gout.sum(axis=(0, 1))
    gw = np.tensordot(gout, windows, axes=([0, 1], [0, 1]))
    gx = np.zeros_like(x)
    for tap in range(width):
        gx[:, tap : tap + out_len] += gout @ w[:, tap]
    return gx, gw, gb


def dense_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w + b


def dense_backward(
    x: np.ndarray, w: np.ndarray, gout: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return gout @ w.T, x.T @ gout, gout.sum(axis=0)


def bn_train_forward(
    x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batch-normalize [M, F] over axis 0; returns (y, xhat, mean, var)."""
    mean = x.mean(axis=0)
    var = x.var(axis=0)
    xhat = (x - mean) / np.sqrt(var + eps)
    return gamma * xhat + beta, xhat, mean, var


def bn_train_backward(
    gout: np.ndarray, xhat: np.ndarray, gamma: np.ndarray, var: np.ndarray, eps: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dgamma = (gout * xhat).sum(axis=0)
    dbeta = gout.sum(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    gx = (gamma * inv_std) * (
        gout - gout.mean(axis=0) - xhat * (gout * xhat).mean(axis=0)
    )
    return gx, dgamma, dbeta


def bn_infer_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    eps: float,
) -> np.ndarray:
    return gamma * (x - running_mean) / np.sqrt(running_var + eps) + beta


def elu_forward(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, x, np.expm1(np.minimum(x, 0.0)))


def elu_backward(x: np.ndarray, gout: np.ndarray) -> np.ndarray:
    return gout * np.where(x > 0.0, 1.0, np.exp(np.minimum(x, 0.0)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic: no overflow for large |x|."""
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    t: int,
) -> None:
    """In-place Adam update of one parameter tensor and its moments."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)
