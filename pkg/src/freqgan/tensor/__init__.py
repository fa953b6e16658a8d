"""Numpy-backed tensors with a small reverse-mode differentiation engine."""
from freqgan.tensor.core import Graph, Tensor, as_tensor, backward, is_grad_enabled, no_grad
from freqgan.tensor.ops import (
    add, avg_pool2d, batch_norm, concat, conv2d, div, elementwise, getitem, global_sum_pool,
    linear, log_softmax, matmul, max_pool2d, mean, mul, neg, pool2d, relu, reshape, scale, sub,
    sum, tanh, transpose, upsample_nearest,
)
from freqgan.tensor.optim import Adam, AdamMoments, adam_step, xavier_init
from freqgan.tensor.checkpoint import load_checkpoint, save_checkpoint
