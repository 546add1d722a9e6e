"""The four benchmark denoising networks.

Every network maps a batch of normalized contaminated segments (B, L) to
denoised segments (B, L).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..autodiff import ops
from ..autodiff.checkpoint import load_arrays, save_arrays
from ..autodiff.tensor import Tensor
from ..dataset import make_rng
from ..errors import InvalidInputError, ShapeError, SpecError
from .layers import LSTM, BatchNorm1d, Conv1d, Dense

ARCHITECTURES = ("FCNN", "SimpleCNN", "ComplexCNN", "RNN")


@dataclass(frozen=True)
class ModelSpec:
    architecture: str
    input_len: int = 512
    feature_maps: int = 64  # SimpleCNN conv width
    branch_width: int = 32  # ComplexCNN width per branch
    hidden_size: int = 1  # RNN hidden dimension
    dropout: float = 0.2

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise SpecError(f"unknown architecture {self.architecture!r}; choose from {ARCHITECTURES}")
        if self.input_len < 16:
            raise SpecError(f"input_len must be >= 16, got {self.input_len}")
        for name in ("feature_maps", "branch_width", "hidden_size"):
            if getattr(self, name) < 1:
                raise SpecError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise SpecError(f"dropout rate must be in [0, 1), got {self.dropout}")

    def to_dict(self):
        return asdict(self)


class Model:
    """A network as an ordered collection of layers plus a forward function."""

    def __init__(self, spec: ModelSpec, layers: dict, forward_fn):
        self.spec = spec
        self.layers = layers
        self._forward = forward_fn

    @property
    def input_len(self):
        return self.spec.input_len

    def named_parameters(self):
        return [(f"{ln}.{pn}", p) for ln, layer in self.layers.items() for pn, p in layer.params.items()]

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def named_buffers(self):
        return [(f"{ln}.{bn}", b) for ln, layer in self.layers.items() for bn, b in layer.buffers.items()]

    def n_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def __call__(self, x, training=False, rng=None):
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.ndim != 2 or x.shape[1] != self.input_len:
            raise ShapeError(f"{self.spec.architecture} expects (batch, {self.input_len}), got {x.shape}")
        if training and self.spec.dropout > 0 and rng is None:
            raise InvalidInputError("training-mode forward with dropout needs an rng")
        return self._forward(self, x, training, rng)

    def predict(self, batch, chunk: int = 256) -> np.ndarray:
        """Inference (dropout off, batchnorm running statistics), no tape."""
        batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
        out = []
        with _no_record():
            for s in range(0, batch.shape[0], chunk):
                out.append(self(batch[s : s + chunk], training=False).data)
        return np.concatenate(out, axis=0)

    def state_arrays(self) -> dict:
        arrays = {name: p.data.copy() for name, p in self.named_parameters()}
        arrays.update({name: b.copy() for name, b in self.named_buffers()})
        return arrays

    def load_state_arrays(self, arrays: dict):
        for name, p in self.named_parameters():
            if arrays[name].shape != p.data.shape:
                raise ShapeError(f"{name}: stored {arrays[name].shape} vs model {p.data.shape}")
            p.data[...] = arrays[name]
        for name, b in self.named_buffers():
            b[...] = arrays[name]

    def save(self, directory):
        return save_arrays(directory, self.state_arrays(), {"model_spec": self.spec.to_dict()})

    @classmethod
    def load(cls, directory) -> "Model":
        arrays, meta = load_arrays(directory)
        model = build_model(ModelSpec(**meta["model_spec"]), seed=0)
        model.load_state_arrays(arrays)
        return model


class _no_record:
    """Suspend any active tape so inference is never recorded."""

    def __enter__(self):
        from ..autodiff import tensor

        self._saved = list(tensor._TAPES)
        tensor._TAPES.clear()

    def __exit__(self, *exc):
        from ..autodiff import tensor

        tensor._TAPES[:] = self._saved
        return False


def _dropout(h, rate, training, rng):
    if not training or rate == 0:
        return h
    keep = 1.0 - rate
    mask = (rng.random(h.shape) < keep).astype(np.float64)
    return ops.dropout(h, mask, keep)


def _check_arch(spec, name):
    if spec.architecture != name:
        raise SpecError(f"spec describes {spec.architecture}, not {name}")


def build_fcnn(spec: ModelSpec, seed: int = 0) -> Model:
    """Four ReLU hidden layers of width L, dropout after each, linear output of width L."""
    _check_arch(spec, "FCNN")
    rng = make_rng(seed, 11)
    L = spec.input_len
    layers = {f"dense{i}": Dense(L, L, rng, init="he") for i in range(4)}
    layers["out"] = Dense(L, L, rng, init="xavier")

    def forward(m, x, training, rng_):
        h = x
        for i in range(4):
            h = _dropout(ops.relu(m.layers[f"dense{i}"](h)), spec.dropout, training, rng_)
        return m.layers["out"](h)

    return Model(spec, layers, forward)


def build_simple_cnn(spec: ModelSpec, seed: int = 0) -> Model:
    """Four [conv k3 s1 same -> batchnorm -> ReLU] blocks, flatten, dense to L."""
    _check_arch(spec, "SimpleCNN")
    rng = make_rng(seed, 12)
    L, n = spec.input_len, spec.feature_maps
    layers = {}
    for i in range(4):
        layers[f"conv{i}"] = Conv1d(1 if i == 0 else n, n, 3, rng)
        layers[f"bn{i}"] = BatchNorm1d(n)
    layers["out"] = Dense(n * L, L, rng, init="xavier")

    def forward(m, x, training, rng_):
        h = ops.reshape(x, (x.shape[0], 1, L))
        for i in range(4):
            h = ops.relu(m.layers[f"bn{i}"](m.layers[f"conv{i}"](h), training))
        return m.layers["out"](ops.flatten(h))

    return Model(spec, layers, forward)


def residual_block(m, prefix, h, training):
    """conv-BN-ReLU-conv-BN plus identity skip, ReLU after the addition."""
    z = ops.relu(m.layers[f"{prefix}.bn1"](m.layers[f"{prefix}.conv1"](h), training))
    z = m.layers[f"{prefix}.bn2"](m.layers[f"{prefix}.conv2"](z), training)
    return ops.relu(ops.add(z, h))


BRANCH_KERNELS = (3, 5, 7)


def build_complex_cnn(spec: ModelSpec, seed: int = 0) -> Model:
    """Stem conv, three parallel residual branches (kernels 3/5/7, two blocks
    each), channel concat, 1x1 merge conv, flatten, dense to L."""
    _check_arch(spec, "ComplexCNN")
    rng = make_rng(seed, 13)
    L, w = spec.input_len, spec.branch_width
    layers = {"stem.conv": Conv1d(1, w, 3, rng), "stem.bn": BatchNorm1d(w)}
    for k in BRANCH_KERNELS:
        for blk in range(2):
            p = f"k{k}.res{blk}"
            layers[f"{p}.conv1"] = Conv1d(w, w, k, rng)
            layers[f"{p}.bn1"] = BatchNorm1d(w)
            layers[f"{p}.conv2"] = Conv1d(w, w, k, rng)
            layers[f"{p}.bn2"] = BatchNorm1d(w)
    layers["merge"] = Conv1d(3 * w, w, 1, rng, bias=True, init="xavier")
    layers["out"] = Dense(w * L, L, rng, init="xavier")

    def forward(m, x, training, rng_):
        h = ops.reshape(x, (x.shape[0], 1, L))
        h = ops.relu(m.layers["stem.bn"](m.layers["stem.conv"](h), training))
        branches = []
        for k in BRANCH_KERNELS:
            b = h
            for blk in range(2):
                b = residual_block(m, f"k{k}.res{blk}", b, training)
            branches.append(b)
        merged = m.layers["merge"](ops.concat(branches, axis=1))
        return m.layers["out"](ops.flatten(merged))

    return Model(spec, layers, forward)


def build_rnn(spec: ModelSpec, seed: int = 0) -> Model:
    """LSTM over the samples (one input per step), then a 3-layer dense head."""
    _check_arch(spec, "RNN")
    rng = make_rng(seed, 14)
    L, H = spec.input_len, spec.hidden_size
    layers = {
        "lstm": LSTM(1, H, rng),
        "fc0": Dense(L * H, L, rng, init="he"),
        "fc1": Dense(L, L, rng, init="he"),
        "out": Dense(L, L, rng, init="xavier"),
    }

    def forward(m, x, training, rng_):
        states = m.layers["lstm"](ops.reshape(x, (x.shape[0], L, 1)))
        h = ops.flatten(states)
        h = _dropout(ops.relu(m.layers["fc0"](h)), spec.dropout, training, rng_)
        h = _dropout(ops.relu(m.layers["fc1"](h)), spec.dropout, training, rng_)
        return m.layers["out"](h)

    return Model(spec, layers, forward)


_BUILDERS = {
    "FCNN": build_fcnn,
    "SimpleCNN": build_simple_cnn,
    "ComplexCNN": build_complex_cnn,
    "RNN": build_rnn,
}


def build_model(spec: ModelSpec, seed: int = 0) -> Model:
    return _BUILDERS[spec.architecture](spec, seed)
