from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import max_rel_error, numeric_grad
from .kernels import ConvParams, dilated_conv2d, dilated_conv2d_backward, receptive_field_extent
from .optim import INIT_STD, OptimizerState, gaussian_init, sgd_step
from .tensor import (
    Tensor,
    add,
    bce,
    channel_softmax,
    check_finite,
    concat_channels,
    conv2d,
    log,
    mean,
    mse,
    mul,
    relu,
    sigmoid,
    split_channels,
    sub,
    tsum,
)

__all__ = [
    "ConvParams",
    "INIT_STD",
    "OptimizerState",
    "Tensor",
    "add",
    "bce",
    "channel_softmax",
    "check_finite",
    "concat_channels",
    "conv2d",
    "dilated_conv2d",
    "dilated_conv2d_backward",
    "gaussian_init",
    "load_checkpoint",
    "log",
    "max_rel_error",
    "mean",
    "mse",
    "mul",
    "numeric_grad",
    "receptive_field_extent",
    "relu",
    "save_checkpoint",
    "sgd_step",
    "sigmoid",
    "split_channels",
    "sub",
    "tsum",
]
