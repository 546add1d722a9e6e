"""Minibatch Adam training on MSE, and normalize-infer-restore inference."""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from ..autodiff import ops
from ..autodiff.optim import AdamState, adam_step
from ..autodiff.tensor import Tape
from ..dataset import PairSet, make_rng
from ..errors import DegenerateSignalError, InvalidInputError, ShapeError
from ..signal_core import Segment

# Epoch counts used for the published benchmark, per artifact type.
PAPER_EPOCHS = {
    "ocular": {"FCNN": 60, "SimpleCNN": 40, "ComplexCNN": 40, "RNN": 100},
    "myogenic": {"FCNN": 60, "SimpleCNN": 10, "ComplexCNN": 10, "RNN": 60},
}


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 60
    batch_size: int = 64
    lr: float = 5e-5
    beta1: float = 0.5
    beta2: float = 0.9
    eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise InvalidInputError("epochs must be >= 1")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be >= 1")


@dataclass
class TrainRecord:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    model: object = None

    def rows(self):
        return [(i + 1, t, v) for i, (t, v) in enumerate(zip(self.train_loss, self.val_loss))]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "train_loss", "val_loss"])
            for epoch, t, v in self.rows():
                w.writerow([epoch, repr(float(t)), repr(float(v))])


def _as_arrays(pairs):
    """Normalized ``(inputs, targets)`` from a PairSet or an ``(x_hat, y_hat)`` tuple."""
    if isinstance(pairs, PairSet):
        x_hat, y_hat = pairs.normalized()
    else:
        x_hat, y_hat = pairs
    return np.asarray(y_hat, dtype=np.float64), np.asarray(x_hat, dtype=np.float64)


def evaluate_loss(model, inputs, targets, chunk=256) -> float:
    pred = model.predict(inputs, chunk=chunk)
    return float(np.mean((pred - targets) ** 2))


def train(model, train_pairs, val_pairs, cfg: TrainConfig, progress=None) -> TrainRecord:
    """Fit ``model`` to map normalized contaminated segments onto normalized
    ground truth. Deterministic for a fixed ``cfg.seed``."""
    inputs, targets = _as_arrays(train_pairs)
    v_inputs, v_targets = _as_arrays(val_pairs)
    L = model.input_len
    for name, arr in (("train", inputs), ("validation", v_inputs)):
        if arr.ndim != 2 or arr.shape[1] != L:
            raise ShapeError(f"{name} segments have shape {arr.shape}, model expects length {L}")
    rng = make_rng(cfg.seed, 0x7A1)
    params = model.parameters()
    opt = AdamState(params, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    rec = TrainRecord(model=model)
    n = inputs.shape[0]
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            with Tape() as tape:
                loss = ops.mse(model(inputs[idx], training=True, rng=rng), targets[idx])
            grads = tape.backward(loss, params)
            adam_step(opt, grads)
            total += float(loss.data) * idx.size
        rec.train_loss.append(total / n)
        rec.val_loss.append(evaluate_loss(model, v_inputs, v_targets))
        rec.epoch_seconds.append(time.perf_counter() - t0)
        if progress is not None:
            progress(epoch + 1, rec.train_loss[-1], rec.val_loss[-1])
    return rec


def denoise(model, contaminated: Segment) -> Segment:
    """Scale by 1/std(y), run inference, restore the scale."""
    if len(contaminated) != model.input_len:
        raise ShapeError(f"segment length {len(contaminated)} != model input length {model.input_len}")
    y = contaminated.samples
    sigma = float(y.std())
    if sigma == 0:
        raise DegenerateSignalError("cannot normalize a constant segment")
    out = model.predict((y / sigma)[None, :])[0]
    return Segment(out * sigma, contaminated.fs)


def denoise_batch(model, y: np.ndarray) -> np.ndarray:
    """Vectorized :func:`denoise` over rows of ``y``."""
    sigma = y.std(axis=1, keepdims=True)
    if np.any(sigma == 0):
        raise DegenerateSignalError("cannot normalize a constant segment")
    return model.predict(y / sigma) * sigma
