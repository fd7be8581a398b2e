from .tensor import Tensor, as_tensor, backward, concat, no_grad, norm, relu, sqrt, square, stack, tsum
from .ops import (conv1d_edge, concat_features, group_norm, l2, linear, masked_mse, mse,
                  rodrigues, slice_time)
from .optim import AdamState, adam_step
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Tensor", "as_tensor", "backward", "concat", "no_grad", "norm", "relu", "sqrt", "square",
    "stack", "tsum", "conv1d_edge", "concat_features", "group_norm", "l2", "linear",
    "masked_mse", "mse", "rodrigues", "slice_time", "AdamState", "adam_step",
    "load_checkpoint", "save_checkpoint",
]
