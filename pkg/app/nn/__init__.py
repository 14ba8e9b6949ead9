"""
Нейросетевые примитивы и оптимизатор
"""
from app.nn.layers import BatchNormState, Conv2dParams
from app.nn.functional import (
    activate,
    batch_norm,
    conv2d,
    dense,
    depthwise_corr,
    global_avg_pool,
    l2_normalize,
    maxpool2x2,
    relu,
    softmax,
    softmax_cross_entropy,
    tanh,
)
from app.nn.optim import Adam, AdamState, adam_step

__all__ = [
    "Adam",
    "AdamState",
    "BatchNormState",
    "Conv2dParams",
    "activate",
    "adam_step",
    "batch_norm",
    "conv2d",
    "dense",
    "depthwise_corr",
    "global_avg_pool",
    "l2_normalize",
    "maxpool2x2",
    "relu",
    "softmax",
    "softmax_cross_entropy",
    "tanh",
]
