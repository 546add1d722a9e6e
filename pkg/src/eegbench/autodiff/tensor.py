"""Tensors and the recording tape used for reverse-mode differentiation."""
from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from ..errors import InvalidInputError

_TAPES: list = []


def active_tape():
    return _TAPES[-1] if _TAPES else None


class Tensor:
    """A float64 array that can take part in a recorded computation."""

    __slots__ = ("data", "requires_grad", "grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    # Operator sugar; the primitives live in ops.
    def __add__(self, other):
        from . import ops

        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops

        return ops.sub(self, other)

    def __mul__(self, other):
        from . import ops

        return ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from . import ops

        return ops.matmul(self, other)

    def __neg__(self):
        from . import ops

        return ops.scale(self, -1.0)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Record(NamedTuple):
    primitive: str
    inputs: tuple
    output: Tensor
    backward: Callable


class Tape:
    """Ordered log of primitive applications.

    Use as a context manager; primitives executed inside the block are
    recorded when at least one input requires a gradient::

        with Tape() as tape:
            loss = ops.mse(model(x), target)
        grads = tape.backward(loss, params)
    """

    def __init__(self):
        self.records: list[Record] = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.remove(self)
        return False

    def __len__(self):
        return len(self.records)

    def record(self, primitive, inputs, output, backward):
        self.records.append(Record(primitive, tuple(inputs), output, backward))

    def backward(self, loss: Tensor, params: Sequence[Tensor] | None = None):
        """Propagate d(loss)/d(.) back through the tape in reverse order.

        Gradients are written to ``p.grad`` for every tensor in ``params``
        (parameters the loss does not depend on get zeros) and returned as a
        list in the same order. With ``params=None`` every leaf tensor on the
        tape that requires a gradient is populated and the list follows
        first-use order.
        """
        if loss.size != 1:
            raise InvalidInputError(f"backward needs a scalar loss, got shape {loss.shape}")
        adj = {id(loss): np.ones_like(loss.data)}
        for rec in reversed(self.records):
            g = adj.pop(id(rec.output), None)
            if g is None:
                continue
            in_grads = rec.backward(g)
            for t, gi in zip(rec.inputs, in_grads):
                if gi is None or not isinstance(t, Tensor) or not t.requires_grad:
                    continue
                prev = adj.get(id(t))
                adj[id(t)] = gi if prev is None else prev + gi
        if params is None:
            produced = {id(r.output) for r in self.records}
            seen, params = set(), []
            for rec in self.records:
                for t in rec.inputs:
                    if isinstance(t, Tensor) and t.requires_grad and id(t) not in produced and id(t) not in seen:
                        seen.add(id(t))
                        params.append(t)
        out = []
        for p in params:
            g = adj.get(id(p))
            p.grad = np.zeros_like(p.data) if g is None else np.asarray(g, dtype=np.float64).reshape(p.shape)
            out.append(p.grad)
        return out


def backward(tape: Tape, loss: Tensor, params: Sequence[Tensor] | None = None):
    """Functional alias for :meth:`Tape.backward`."""
    return tape.backward(loss, params)
