"""Parameter checkpoints: one ``.npy`` per array plus a JSON manifest."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError

MANIFEST = "manifest.json"


def save_arrays(directory, arrays: dict, meta: dict) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = {}
    for name, arr in arrays.items():
        fname = f"{name}.npy"
        np.save(directory / fname, np.asarray(arr, dtype=np.float64))
        index[name] = {"file": fname, "shape": list(np.shape(arr))}
    body = dict(meta)
    body["arrays"] = index
    (directory / MANIFEST).write_text(json.dumps(body, indent=1, sort_keys=True) + "\n")
    return directory


def load_arrays(directory):
    """Return ``(arrays, meta)`` from a checkpoint directory."""
    directory = Path(directory)
    path = directory / MANIFEST
    if not path.is_file():
        raise FormatError(f"no {MANIFEST} in {directory}", field=str(path))
    try:
        meta = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt manifest {path}: {exc}", field=str(path)) from None
    arrays = {}
    for name, info in meta.get("arrays", {}).items():
        fpath = directory / info["file"]
        if not fpath.is_file():
            raise FormatError(f"checkpoint array missing: {fpath}", field=str(fpath))
        arr = np.load(fpath)
        if list(arr.shape) != list(info["shape"]):
            raise FormatError(f"{fpath}: shape {arr.shape} != manifest {info['shape']}", field=name)
        arrays[name] = arr
    return arrays, meta
