"""Tensor type and the define-by-run reverse-mode engine.

Every differentiable operation builds a new :class:`Tensor` whose
``_parents`` point at its inputs and whose ``_backward`` maps the output
gradient to one gradient per parent. :func:`backward` replays those rules in
reverse topological order. Only leaves (tensors created directly, e.g.
parameters) keep a ``.grad``; interior gradients live only for the duration
of the sweep.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Optional, Sequence

import numpy as np

from freqgan.errors import ContractError, NumericsError

_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    """Disable graph recording inside the block (per thread)."""
    previous = is_grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """Dense float64 array with an optional differentiation record."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._backward is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())

    def check_finite(self, context: str = "") -> "Tensor":
        if not self.is_finite():
            label = self.name or "tensor"
            where = f" ({context})" if context else ""
            raise NumericsError(f"non-finite values in {label}{where}")
        return self

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # operator sugar; implementations live in ops.py
    def __add__(self, other):
        from freqgan.tensor import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from freqgan.tensor import ops
        return ops.add(self, other)

    def __sub__(self, other):
        from freqgan.tensor import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from freqgan.tensor import ops
        return ops.add(ops.neg(self), other)

    def __mul__(self, other):
        from freqgan.tensor import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from freqgan.tensor import ops
        return ops.mul(self, other)

    def __truediv__(self, other):
        from freqgan.tensor import ops
        return ops.div(self, other)

    def __neg__(self):
        from freqgan.tensor import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from freqgan.tensor import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from freqgan.tensor import ops
        return ops.getitem(self, index)

    def sum(self, axis=None):
        from freqgan.tensor import ops
        return ops.sum(self, axis)

    def mean(self, axis=None):
        from freqgan.tensor import ops
        return ops.mean(self, axis)

    def reshape(self, *shape):
        from freqgan.tensor import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def make_result(data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """Wrap an op's output, recording the graph edge if any parent needs it."""
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


class Graph:
    """Operation records reachable from one output, in topological order."""

    def __init__(self, nodes: list[Tensor]):
        self.nodes = nodes

    @classmethod
    def from_output(cls, root: Tensor) -> "Graph":
        order: list[Tensor] = []
        seen: set[int] = set()
        # iterative DFS: deep residual stacks overflow the recursion limit
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return cls(order)

    def __len__(self) -> int:
        return len(self.nodes)

    def backward(self, seed: np.ndarray) -> None:
        root = self.nodes[-1]
        grads: dict[int, np.ndarray] = {id(root): seed}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for parent, pg in zip(node._parents, parent_grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every ``requires_grad`` leaf."""
    if loss.data.size != 1:
        raise ContractError(f"backward() needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise ContractError("loss is not attached to a graph (no input requires grad)")
    Graph.from_output(loss).backward(np.ones_like(loss.data))
