"""The 1-D conv + dense classifier, trained from scratch with Adam.

Architecture: conv(10 kernels, width 3, valid) -> batch-norm -> ELU ->
flatten -> three blocks of [dense -> batch-norm -> ELU -> dropout] with
sizes 256/16/4 and dropout 0.6/0.4/0.2 -> dense(1) -> sigmoid. All
gradients are exact analytic backprop; kernels come from the active
backend (compiled core or numpy twin).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .._util import substream
from ..errors import ConfigError, DimensionError
from . import backend

_P_CLAMP = 1e-7
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    conv_kernels: int = 10
    conv_width: int = 3
    dense_sizes: tuple[int, ...] = (256, 16, 4, 1)
    dropout_rates: tuple[float, ...] = (0.6, 0.4, 0.2)
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5

    def __post_init__(self) -> None:
        object.__setattr__(self, "dense_sizes", tuple(self.dense_sizes))
        object.__setattr__(self, "dropout_rates", tuple(self.dropout_rates))
        if self.conv_kernels < 1 or self.conv_width < 1:
            raise ConfigError("conv_kernels and conv_width must be >= 1")
        if len(self.dense_sizes) < 1 or self.dense_sizes[-1] != 1:
            raise ConfigError("dense_sizes must end in a single output neuron")
        if len(self.dropout_rates) != len(self.dense_sizes) - 1:
            raise ConfigError(
                "need exactly one dropout rate per hidden dense block "
                f"({len(self.dense_sizes) - 1}), got {len(self.dropout_rates)}"
            )
        for rate in self.dropout_rates:
            if not 0.0 <= rate < 1.0:
                raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        if not 0.0 <= self.bn_momentum < 1.0 or self.bn_eps <= 0.0:
            raise ConfigError("invalid batch-norm hyperparameters")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.0002
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 500
    batch_size: int = 20
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigError("beta1/beta2 must be in [0, 1)")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


class Network:
    """Parameter container bound to a spec and input dimension."""

    def __init__(self, spec: NetworkSpec, input_dim: int, params: dict[str, np.ndarray]):
        if input_dim < spec.conv_width:
            raise DimensionError(
                f"input dimension {input_dim} is below the conv width {spec.conv_width}"
            )
        self.spec = spec
        self.input_dim = input_dim
        self.params = params
        self.version = MODEL_FORMAT_VERSION

    @property
    def conv_out_len(self) -> int:
        return self.input_dim - self.spec.conv_width + 1

    @property
    def flat_dim(self) -> int:
        return self.conv_out_len * self.spec.conv_kernels

    def trainable_names(self) -> list[str]:
        return [n for n in self.params if not n.endswith(("_rmean", "_rvar"))]

    def n_parameters(self) -> int:
        return sum(self.params[n].size for n in self.trainable_names())


def _glorot(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape)


def init_network(spec: NetworkSpec, input_dim: int, rng: np.random.Generator) -> Network:
    """Fan-based scaled-uniform weights, zero biases, identity batch-norm."""
    k, w = spec.conv_kernels, spec.conv_width
    params: dict[str, np.ndarray] = {
        "conv_w": _glorot(rng, (k, w), w, w * k),
        "conv_b": np.zeros(k),
        "bn0_gamma": np.ones(k),
        "bn0_beta": np.zeros(k),
        "bn0_rmean": np.zeros(k),
        "bn0_rvar": np.ones(k),
    }
    fan_in = (input_dim - w + 1) * k
    for i, size in enumerate(spec.dense_sizes, start=1):
        params[f"dense{i}_w"] = _glorot(rng, (fan_in, size), fan_in, size)
        params[f"dense{i}_b"] = np.zeros(size)
        if i <= len(spec.dropout_rates):
            params[f"bn{i}_gamma"] = np.ones(size)
            params[f"bn{i}_beta"] = np.zeros(size)
            params[f"bn{i}_rmean"] = np.zeros(size)
            params[f"bn{i}_rvar"] = np.ones(size)
        fan_in = size
    return Network(spec, input_dim, params)


def _as_batch(X: np.ndarray, input_dim: int) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 3 and X.shape[2] == 1:
        X = X[:, :, 0]
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != input_dim:
        raise DimensionError(
            f"expected input of dimension {input_dim}, got shape {X.shape}"
        )
    return X


def _bn_train(ker, params: dict, tag: str, x2d: np.ndarray, spec: NetworkSpec):
    if x2d.shape[0] < 2:
        raise DimensionError("train-mode batch norm needs a batch of at least 2")
    y, xhat, mean, var = ker.bn_train_forward(
        x2d, params[f"{tag}_gamma"], params[f"{tag}_beta"], spec.bn_eps
    )
    mom = spec.bn_momentum
    params[f"{tag}_rmean"] = mom * params[f"{tag}_rmean"] + (1.0 - mom) * mean
    params[f"{tag}_rvar"] = mom * params[f"{tag}_rvar"] + (1.0 - mom) * var
    return y, xhat, var


def forward(
    net: Network,
    X: np.ndarray,
    mode: str = "infer",
    rng: np.random.Generator | None = None,
    return_cache: bool = False,
):
    """Class probabilities for a batch; optionally the backprop cache.

    Train mode uses batch statistics (updating the running ones) and, when
    an rng is supplied, inverted dropout; without an rng dropout is off,
    which is what gradient checking needs.
    """
    if mode not in ("train", "infer"):
        raise ConfigError(f"mode must be 'train' or 'infer', got {mode!r}")
    ker = backend.kernels()
    spec = net.spec
    P = net.params
    train = mode == "train"
    X = _as_batch(X, net.input_dim)
    batch = X.shape[0]
    cache: dict = {"X": X, "mode": mode}

    conv_out = ker.conv1d_forward(X, P["conv_w"], P["conv_b"])
    conv2d = conv_out.reshape(batch * net.conv_out_len, spec.conv_kernels)
    if train:
        bn_out, xhat, var = _bn_train(ker, P, "bn0", conv2d, spec)
        cache["bn0"] = (xhat, var)
    else:
        bn_out = ker.bn_infer_forward(
            conv2d, P["bn0_gamma"], P["bn0_beta"], P["bn0_rmean"], P["bn0_rvar"],
            spec.bn_eps,
        )
    act = ker.elu_forward(bn_out)
    cache["conv2d_in"] = bn_out
    h = act.reshape(batch, net.flat_dim)
    cache["h0"] = h

    n_dense = len(spec.dense_sizes)
    for i in range(1, n_dense + 1):
        cache[f"x{i}"] = h
        z = ker.dense_forward(h, P[f"dense{i}_w"], P[f"dense{i}_b"])
        if i == n_dense:
            prob = ker.sigmoid(z).reshape(-1)
            cache["z_out"] = z
            cache["prob"] = prob
            if return_cache:
                return prob, cache
            return prob
        if train:
            bn_z, xhat, var = _bn_train(ker, P, f"bn{i}", z, spec)
            cache[f"bn{i}"] = (xhat, var)
        else:
            bn_z = ker.bn_infer_forward(
                z, P[f"bn{i}_gamma"], P[f"bn{i}_beta"], P[f"bn{i}_rmean"],
                P[f"bn{i}_rvar"], spec.bn_eps,
            )
        cache[f"pre_act{i}"] = bn_z
        h = ker.elu_forward(bn_z)
        rate = spec.dropout_rates[i - 1]
        if train and rng is not None and rate > 0.0:
            keep = (rng.random(h.shape) >= rate) / (1.0 - rate)
            h = h * keep
            cache[f"drop{i}"] = keep
    raise AssertionError("unreachable")


def bce_loss(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient with respect to p.

    Probabilities are clamped to [1e-7, 1 - 1e-7] before the logs.
    """
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if p.shape != y.shape:
        raise DimensionError(f"prediction/label shape mismatch: {p.shape} vs {y.shape}")
    pc = np.clip(p, _P_CLAMP, 1.0 - _P_CLAMP)
    loss = float(np.mean(-(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))))
    grad_p = (pc - y) / (pc * (1.0 - pc)) / p.shape[0]
    return loss, grad_p


def backward(
    net: Network,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator | None = None,
    cache: dict | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact analytic gradients for every trainable parameter.

    Runs a train-mode forward pass (dropout only when an rng is given)
    unless a cache from such a pass is supplied.
    """
    ker = backend.kernels()
    spec = net.spec
    P = net.params
    if cache is None:
        _, cache = forward(net, X, mode="train", rng=rng, return_cache=True)
    prob = cache["prob"]
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    loss, grad_p = bce_loss(prob, y)
    pc = np.clip(prob, _P_CLAMP, 1.0 - _P_CLAMP)
    dz = (grad_p * pc * (1.0 - pc)).reshape(-1, 1)

    grads: dict[str, np.ndarray] = {}
    n_dense = len(spec.dense_sizes)
    for i in range(n_dense, 0, -1):
        if i < n_dense:
            if f"drop{i}" in cache:
                dz = dz * cache[f"drop{i}"]
            dz = ker.elu_backward(cache[f"pre_act{i}"], dz)
            xhat, var = cache[f"bn{i}"]
            dz, dgamma, dbeta = ker.bn_train_backward(
                dz, xhat, P[f"bn{i}_gamma"], var, spec.bn_eps
            )
            grads[f"bn{i}_gamma"] = dgamma
            grads[f"bn{i}_beta"] = dbeta
        dh, dw, db = ker.dense_backward(cache[f"x{i}"], P[f"dense{i}_w"], dz)
        grads[f"dense{i}_w"] = dw
        grads[f"dense{i}_b"] = db
        dz = dh

    batch = cache["X"].shape[0]
    d_act = dz.reshape(batch * net.conv_out_len, spec.conv_kernels)
    d_bn = ker.elu_backward(cache["conv2d_in"], d_act)
    xhat, var = cache["bn0"]
    d_conv2d, dgamma, dbeta = ker.bn_train_backward(
        d_bn, xhat, P["bn0_gamma"], var, spec.bn_eps
    )
    grads["bn0_gamma"] = dgamma
    grads["bn0_beta"] = dbeta
    d_conv = np.ascontiguousarray(
        d_conv2d.reshape(batch, net.conv_out_len, spec.conv_kernels)
    )
    _, gw, gb = ker.conv1d_backward(cache["X"], P["conv_w"], d_conv)
    grads["conv_w"] = gw
    grads["conv_b"] = gb
    return loss, grads


class AdamState:
    """First and second moment estimates per parameter tensor."""

    def __init__(self, params: dict[str, np.ndarray], names: list[str]):
        self.m = {n: np.zeros_like(params[n]) for n in names}
        self.v = {n: np.zeros_like(params[n]) for n in names}


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    config: TrainConfig,
    t: int,
) -> None:
    """One bias-corrected Adam update, in place, over named tensors."""
    if t < 1:
        raise ConfigError(f"Adam step index must be >= 1, got {t}")
    ker = backend.kernels()
    for name, grad in grads.items():
        if params[name].shape != grad.shape:
            raise DimensionError(
                f"gradient shape {grad.shape} does not match parameter "
                f"{name} of shape {params[name].shape}"
            )
        ker.adam_step(
            params[name], grad, state.m[name], state.v[name],
            config.learning_rate, config.beta1, config.beta2, config.epsilon, t,
        )


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    chunks = [order[s : s + batch_size] for s in range(0, order.shape[0], batch_size)]
    # A trailing singleton would break train-mode batch norm; fold it in.
    if len(chunks) > 1 and chunks[-1].shape[0] == 1:
        chunks[-2] = np.concatenate([chunks[-2], chunks[-1]])
        chunks.pop()
    return chunks


def train(
    spec: NetworkSpec,
    train_split: tuple[np.ndarray, np.ndarray],
    config: TrainConfig,
) -> tuple[Network, np.ndarray]:
    """Train a fresh network; returns it plus the per-epoch mean loss curve.

    Deterministic given config.seed (initialization, shuffling, and dropout
    all draw from one Philox stream).
    """
    X, y = train_split
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ConfigError("training split must be a non-empty 2-D matrix")
    if X.shape[0] != y.shape[0]:
        raise DimensionError("one label per training row is required")
    rng = substream(config.seed)
    net = init_network(spec, X.shape[1], rng)
    state = AdamState(net.params, net.trainable_names())
    n = X.shape[0]
    losses = np.empty(config.epochs)
    t = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_loss = 0.0
        for idx in _batches(order, config.batch_size):
            loss, grads = backward(net, X[idx], y[idx], rng=rng)
            t += 1
            adam_step(net.params, grads, state, config, t)
            epoch_loss += loss * idx.shape[0]
        losses[epoch] = epoch_loss / n
    return net, losses


def predict(net: Network, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    """Hard labels; a probability exactly at the threshold maps to 1."""
    prob = forward(net, X, mode="infer")
    return (prob >= threshold).astype(np.int64)


def predict_proba(net: Network, X: np.ndarray) -> np.ndarray:
    return forward(net, X, mode="infer")


def accuracy(labels: np.ndarray, y: np.ndarray) -> float:
    labels = np.asarray(labels).reshape(-1)
    y = np.asarray(y).reshape(-1)
    if labels.shape != y.shape:
        raise DimensionError("label vectors must have equal length")
    return float(np.mean(labels == y))


# -- helpers shared by serialization and gradient checking --------------------

def params_order(net: Network) -> list[str]:
    return sorted(net.params)


def get_flat_params(net: Network, names: list[str] | None = None) -> np.ndarray:
    names = names if names is not None else net.trainable_names()
    return np.concatenate([net.params[n].ravel() for n in names])


def set_flat_params(net: Network, flat: np.ndarray, names: list[str] | None = None) -> None:
    names = names if names is not None else net.trainable_names()
    pos = 0
    for n in names:
        size = net.params[n].size
        net.params[n] = flat[pos : pos + size].reshape(net.params[n].shape).copy()
        pos += size
    if pos != flat.shape[0]:
        raise DimensionError("flat parameter vector has the wrong length")


def network_to_dict(net: Network) -> dict:
    return {
        "format_version": net.version,
        "input_dim": net.input_dim,
        "spec": {
            "conv_kernels": net.spec.conv_kernels,
            "conv_width": net.spec.conv_width,
            "dense_sizes": list(net.spec.dense_sizes),
            "dropout_rates": list(net.spec.dropout_rates),
            "bn_momentum": net.spec.bn_momentum,
            "bn_eps": net.spec.bn_eps,
        },
        "params": {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in sorted(net.params.items())
        },
    }


def network_from_dict(d: dict) -> Network:
    if d.get("format_version") != MODEL_FORMAT_VERSION:
        raise ConfigError(
            f"unsupported model format version {d.get('format_version')!r}"
        )
    s = d["spec"]
    spec = NetworkSpec(
        conv_kernels=s["conv_kernels"],
        conv_width=s["conv_width"],
        dense_sizes=tuple(s["dense_sizes"]),
        dropout_rates=tuple(s["dropout_rates"]),
        bn_momentum=s["bn_momentum"],
        bn_eps=s["bn_eps"],
    )
    params = {
        name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in d["params"].items()
    }
    return Network(spec, d["input_dim"], params)
