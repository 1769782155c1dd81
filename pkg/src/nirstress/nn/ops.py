"""Validated single-layer operations, dispatching to the active backend.

These are the standalone building blocks; training composes the same
kernels through network.py.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, DimensionError
from . import backend


def _squeeze_channel(x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim == 3 and x.shape[2] == 1:
        x = x[:, :, 0]
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DimensionError(f"expected [batch, length] input, got shape {x.shape}")
    return x


def conv1d_forward(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid cross-correlation, stride 1, bias per output map."""
    x = _squeeze_channel(x)
    kernels = np.ascontiguousarray(kernels, dtype=np.float64)
    bias = np.ascontiguousarray(bias, dtype=np.float64)
    if x.shape[1] < kernels.shape[1]:
        raise DimensionError(
            f"input length {x.shape[1]} is below the kernel width {kernels.shape[1]}"
        )
    return backend.kernels().conv1d_forward(x, kernels, bias)


def batchnorm_forward(
    x: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    mode: str,
    running_mean: np.ndarray | None = None,
    running_var: np.ndarray | None = None,
    momentum: float = 0.9,
    eps: float = 1e-5,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch normalization over axis 0 of a [batch, features] matrix.

    Returns (output, running_mean, running_var); train mode folds the batch
    statistics into the running ones with the given momentum.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    gamma = np.ascontiguousarray(gamma, dtype=np.float64)
    beta = np.ascontiguousarray(beta, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError("batchnorm_forward expects a [batch, features] matrix")
    if running_mean is None:
        running_mean = np.zeros(x.shape[1])
    if running_var is None:
        running_var = np.ones(x.shape[1])
    ker = backend.kernels()
    if mode == "train":
        if x.shape[0] < 2:
            raise DimensionError("train-mode batch norm needs a batch of at least 2")
        y, _, mean, var = ker.bn_train_forward(x, gamma, beta, eps)
        running_mean = momentum * running_mean + (1.0 - momentum) * mean
        running_var = momentum * running_var + (1.0 - momentum) * var
        return y, running_mean, running_var
    if mode == "infer":
        y = ker.bn_infer_forward(
            x, gamma, beta,
            np.ascontiguousarray(running_mean, dtype=np.float64),
            np.ascontiguousarray(running_var, dtype=np.float64),
            eps,
        )
        return y, running_mean, running_var
    raise ConfigError(f"mode must be 'train' or 'infer', got {mode!r}")


def elu(x: np.ndarray) -> np.ndarray:
    return backend.kernels().elu_forward(np.ascontiguousarray(x, dtype=np.float64))


def sigmoid(x: np.ndarray) -> np.ndarray:
    return backend.kernels().sigmoid(np.ascontiguousarray(x, dtype=np.float64))


def dropout(
    x: np.ndarray,
    rate: float,
    mode: str,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Inverted dropout: train-time zeroing with survivor rescaling."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "infer"):
        raise ConfigError(f"mode must be 'train' or 'infer', got {mode!r}")
    x = np.asarray(x, dtype=np.float64)
    if mode == "infer" or rate == 0.0:
        return x.copy()
    if rng is None:
        raise ConfigError("train-mode dropout needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep
