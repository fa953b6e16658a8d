"""Layers: linear, (spectral-normalized) convolution, batch norm, residual blocks."""
from __future__ import annotations

import warnings
from contextlib import contextmanager

import numpy as np

from freqgan.errors import ShapeError
from freqgan.tensor import Tensor, ops, xavier_init

SIGMA_FLOOR = 1e-12


class Module:
    """Minimal container: discovers parameters, buffers and children by attribute."""

    training = True
    _buffer_names: tuple[str, ...] = ()

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def _children(self):
        for name, value in vars(self).items():
            if isinstance(value, Module):
                yield name, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{name}.{i}", item

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out = {}
        for name, value in vars(self).items():
            if isinstance(value, Tensor):
                out[prefix + name] = value
        for name, child in self._children():
            out.update(child.parameters(f"{prefix}{name}."))
        return out

    def buffers(self, prefix: str = "") -> dict[str, np.ndarray]:
        out = {prefix + n: getattr(self, n) for n in self._buffer_names}
        for name, child in self._children():
            out.update(child.buffers(f"{prefix}{name}."))
        return out

    def modules(self):
        yield self
        for _, child in self._children():
            yield from child.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.grad = None

    def state_arrays(self, prefix: str = "") -> dict[str, np.ndarray]:
        arrays = {k: v.data for k, v in self.parameters(prefix).items()}
        arrays.update(self.buffers(prefix))
        return arrays

    def load_state_arrays(self, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
        for k, p in self.parameters(prefix).items():
            if p.data.shape != arrays[k].shape:
                raise ShapeError(f"{k}: checkpoint shape {arrays[k].shape} != {p.data.shape}")
            p.data[...] = arrays[k]
        for k, buf in self.buffers(prefix).items():
            buf[...] = arrays[k]


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, bias: bool = True):
        self.weight = xavier_init((n_out, n_in), rng)
        self.bias = Tensor(np.zeros(n_out), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.linear(x, self.weight, self.bias)


class Conv(Module):
    """Plain convolution (no normalization)."""

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, bias: bool = True):
        self.weight = xavier_init((c_out, c_in, k, k), rng)
        self.bias = Tensor(np.zeros(c_out), requires_grad=True) if bias else None
        self.stride, self.pad = stride, pad

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, self.stride, self.pad)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / max(float(np.linalg.norm(v)), SIGMA_FLOOR)


class SNConv(Module):
    """Convolution whose weight is divided by its estimated top singular value.

    The estimate comes from power iteration (training mode only) on the ``C_out × (C_in·k·k)``
    flattening, with ``u``/``v`` persisted between calls so that one
    iteration per training step suffices once warmed up. Gradients treat
    ``u`` and ``v`` as constants.
    """

    _buffer_names = ("u", "v")

    def __init__(self, c_in: int, c_out: int, k: int, rng: np.random.Generator,
                 stride: int = 1, pad: int = 0, bias: bool = True, iterations: int = 1):
        self.weight = xavier_init((c_out, c_in, k, k), rng)
        self.bias = Tensor(np.zeros(c_out), requires_grad=True) if bias else None
        self.stride, self.pad = stride, pad
        self.iterations = iterations
        self.power_iteration = True
        self.u = _unit(rng.standard_normal(c_out))
        self.v = _unit(self.weight.data.reshape(c_out, -1).T @ self.u)

    @property
    def sigma(self) -> float:
        w = self.weight.data.reshape(self.weight.shape[0], -1)
        return float(self.u @ w @ self.v)

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, sn_normalize(self), self.bias, self.stride, self.pad)


def sn_normalize(layer: SNConv, iterations: int | None = None) -> Tensor:
    """Advance the power iteration (if enabled) and return weight / sigma_hat."""
    n_iter = layer.iterations if iterations is None else iterations
    w = layer.weight
    wmat = w.data.reshape(w.shape[0], -1)
    if layer.power_iteration and layer.training:
        for _ in range(n_iter):
            layer.v = _unit(wmat.T @ layer.u)
            layer.u = _unit(wmat @ layer.v)
    outer = np.outer(layer.u, layer.v).reshape(w.shape)
    sigma = ops.sum(ops.mul(w, Tensor(outer)))
    if abs(sigma.item()) < SIGMA_FLOOR:
        warnings.warn("spectral norm estimate below 1e-12; flooring", RuntimeWarning, stacklevel=2)
        sigma = Tensor(SIGMA_FLOOR)
    return ops.div(w, sigma)


class BatchNorm(Module):
    _buffer_names = ("running_mean", "running_var")

    def __init__(self, channels: int, momentum: float = ops.BN_MOMENTUM, eps: float = ops.BN_EPS):
        self.gamma = Tensor(np.ones(channels), requires_grad=True)
        self.beta = Tensor(np.zeros(channels), requires_grad=True)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum, self.eps = momentum, eps

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm(x, self.gamma, self.beta, self.running_mean, self.running_var,
                              self.training, self.momentum, self.eps)


class ResBlock(Module):
    """Residual block of two 3×3 SN convolutions.

    Generator blocks (``bn=True``) run BN, ReLU, optional nearest ×2 upsample,
    conv, BN, ReLU, conv. Discriminator blocks run an optional leading ReLU,
    conv, ReLU, conv and an optional 2×2 average pool. The shortcut upsamples
    or pools alongside and gets a 1×1 SN projection only when the channel
    count changes.
    """

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator, *, up: bool = False,
                 down: bool = False, bn: bool = False, pre_activation: bool = False,
                 activation: str = "relu"):
        if up and down:
            raise ShapeError("a block cannot both upsample and downsample")
        if activation != "relu":
            raise ShapeError(f"unsupported activation {activation!r}")
        self.c_in, self.c_out = c_in, c_out
        self.up, self.down, self.bn, self.pre_activation = up, down, bn, pre_activation
        self.activation = activation
        self.conv1 = SNConv(c_in, c_out, 3, rng, pad=1)
        self.conv2 = SNConv(c_out, c_out, 3, rng, pad=1)
        self.bn1 = BatchNorm(c_in) if bn else None
        self.bn2 = BatchNorm(c_out) if bn else None
        self.shortcut = SNConv(c_in, c_out, 1, rng) if c_in != c_out else None

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.c_in:
            raise ShapeError(f"ResBlock expects B×{self.c_in}×H×W input, got {x.shape}")
        h = x
        if self.bn:
            h = ops.relu(self.bn1(h))
        elif self.pre_activation:
            h = ops.relu(h)
        if self.up:
            h = ops.upsample_nearest(h, 2)
        h = self.conv1(h)
        h = ops.relu(self.bn2(h) if self.bn else h)
        h = self.conv2(h)
        if self.down:
            h = ops.avg_pool2d(h, 2)

        sc = ops.upsample_nearest(x, 2) if self.up else x
        if self.shortcut is not None:
            sc = self.shortcut(sc)
        if self.down:
            sc = ops.avg_pool2d(sc, 2)
        return ops.add(h, sc)


def set_power_iteration(module: Module, enabled: bool) -> None:
    """Freeze or resume the spectral-norm power iteration in every SNConv."""
    for m in module.modules():
        if isinstance(m, SNConv):
            m.power_iteration = enabled



@contextmanager
def frozen(module: Module):
    """Temporarily mark every parameter of ``module`` as not requiring grad."""
    params = list(module.parameters().values())
    for p in params:
        p.requires_grad = False
    try:
        yield module
    finally:
        for p in params:
            p.requires_grad = True
