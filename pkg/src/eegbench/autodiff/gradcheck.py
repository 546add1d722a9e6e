"""Central finite-difference gradient checking."""
from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError, NumericError
from .tensor import Tape


def numerical_grad(loss_fn, p, eps: float) -> np.ndarray:
    g = np.zeros_like(p.data)
    flat, gflat = p.data.reshape(-1), g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        up = float(loss_fn().data)
        flat[i] = orig - eps
        down = float(loss_fn().data)
        flat[i] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise NumericError(f"non-finite loss while probing {p!r}[{i}]")
        gflat[i] = (up - down) / (2.0 * eps)
    return g


def relative_error(analytic, numeric) -> float:
    """``|a - n| / max(|a|, |n|, 1e-12)`` using Euclidean norms over a tensor."""
    num = np.linalg.norm(analytic - numeric)
    den = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(num / den)


def grad_check(loss_fn, params, eps: float = 1e-5, return_all: bool = False):
    """Compare tape gradients of ``loss_fn()`` with central differences.

    ``loss_fn`` must be deterministic (fixed dropout masks, fixed data) and
    return a scalar Tensor. Returns the max relative error over ``params``.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise InvalidInputError(f"eps must lie in [1e-7, 1e-3], got {eps}")
    with Tape() as tape:
        loss = loss_fn()
    if not np.isfinite(loss.data).all():
        raise NumericError("loss is not finite")
    analytic = [g.copy() for g in tape.backward(loss, params)]
    errors = []
    for p, a in zip(params, analytic):
        errors.append(relative_error(a, numerical_grad(loss_fn, p, eps)))
    worst = max(errors) if errors else 0.0
    return (worst, errors) if return_all else worst
