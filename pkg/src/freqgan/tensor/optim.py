"""Adam and Xavier initialization."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from freqgan.errors import ContractError, NumericsError
from freqgan.tensor.core import Tensor


def fans(shape) -> tuple[int, int]:
    """(fan_in, fan_out) for a linear [out×in] or conv [O×C×k×k] weight."""
    shape = tuple(int(s) for s in shape)
    if len(shape) < 2:
        raise ContractError(f"cannot derive fans from shape {shape}")
    receptive = int(np.prod(shape[2:])) if len(shape) > 2 else 1
    fan_in, fan_out = shape[1] * receptive, shape[0] * receptive
    if fan_in == 0 or fan_out == 0:
        raise ContractError(f"zero fan for shape {shape}")
    return fan_in, fan_out


def xavier_init(shape, rng: np.random.Generator, requires_grad: bool = True) -> Tensor:
    """Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out))."""
    fan_in, fan_out = fans(shape)
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-a, a, size=shape), requires_grad=requires_grad)


@dataclass
class AdamMoments:
    m: np.ndarray
    v: np.ndarray


def adam_step(params, grads, moments, lr: float, beta1: float = 0.0, beta2: float = 0.9,
              eps: float = 1e-8, t: int = 1) -> None:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if t < 1:
        raise ContractError(f"Adam step counter must start at 1, got {t}")
    grads = list(grads)
    for g in grads:
        if g is not None and not np.isfinite(g).all():
            raise NumericsError(f"non-finite gradient at Adam step {t}")
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for p, g, mom in zip(params, grads, moments):
        if g is None:
            continue
        mom.m *= beta1
        mom.m += (1.0 - beta1) * g
        mom.v *= beta2
        mom.v += (1.0 - beta2) * g * g
        p.data -= lr * (mom.m / c1) / (np.sqrt(mom.v / c2) + eps)


@dataclass
class Adam:
    """Adam over a fixed, named parameter set."""

    params: dict[str, Tensor]
    beta1: float = 0.0
    beta2: float = 0.9
    eps: float = 1e-8
    t: int = 0
    moments: dict[str, AdamMoments] = field(default_factory=dict)

    def __post_init__(self):
        for name, p in self.params.items():
            self.moments.setdefault(name, AdamMoments(np.zeros_like(p.data), np.zeros_like(p.data)))

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def step(self, lr: float) -> None:
        self.t += 1
        names = list(self.params)
        adam_step([self.params[n] for n in names], [self.params[n].grad for n in names],
                  [self.moments[n] for n in names], lr, self.beta1, self.beta2, self.eps, self.t)
