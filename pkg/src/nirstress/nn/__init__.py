"""Neural network subpackage: backend-dispatched kernels plus the model."""

from .backend import active_backend, available_backends, kernels, set_backend
from .network import (
    AdamState,
    Network,
    NetworkSpec,
    TrainConfig,
    accuracy,
    adam_step,
    backward,
    bce_loss,
    forward,
    get_flat_params,
    init_network,
    network_from_dict,
    network_to_dict,
    predict,
    predict_proba,
    set_flat_params,
    train,
)
from .ops import batchnorm_forward, conv1d_forward, dropout, elu, sigmoid

__all__ = [
    "AdamState",
    "Network",
    "NetworkSpec",
    "TrainConfig",
    "accuracy",
    "active_backend",
    "adam_step",
    "available_backends",
    "backward",
    "batchnorm_forward",
    "bce_loss",
    "conv1d_forward",
    "dropout",
    "elu",
    "forward",
    "get_flat_params",
    "init_network",
    "kernels",
    "network_from_dict",
    "network_to_dict",
    "predict",
    "predict_proba",
    "set_backend",
    "set_flat_params",
    "sigmoid",
    "train",
]
