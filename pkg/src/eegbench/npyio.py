"""Reader for version-1.0 ``.npy`` files holding float matrices.

Only the subset needed for the published segment banks is accepted:
little-endian float32/float64, C order. Anything else raises
:class:`FormatError` naming the offending field.
"""
from __future__ import annotations

import ast
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"\x93NUMPY"
_DTYPES = {"<f8": np.dtype("<f8"), "<f4": np.dtype("<f4")}


def parse_header(buf: bytes):
    """Return ``(dtype, shape, data_offset)`` from the leading bytes of a file."""
    if len(buf) < 10:
        raise FormatError("file too short to hold an .npy header", field="magic")
    if buf[:6] != MAGIC:
        raise FormatError(f"bad magic string {buf[:6]!r}", field="magic")
    major, minor = buf[6], buf[7]
    if (major, minor) != (1, 0):
        raise FormatError(f"unsupported format version {major}.{minor}", field="version")
    (hlen,) = struct.unpack("<H", buf[8:10])
    end = 10 + hlen
    if len(buf) < end:
        raise FormatError("truncated header", field="header_len")
    try:
        header = ast.literal_eval(buf[10:end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"unparseable header dictionary: {exc}", field="header") from None
    if not isinstance(header, dict):
        raise FormatError("header is not a dictionary", field="header")
    for key in ("descr", "fortran_order", "shape"):
        if key not in header:
            raise FormatError(f"header lacks {key!r}", field=key)
    descr = header["descr"]
    if descr not in _DTYPES:
        raise FormatError(f"unsupported dtype {descr!r}; need '<f4' or '<f8'", field="descr")
    if header["fortran_order"] is not False:
        raise FormatError("Fortran-ordered arrays are not supported", field="fortran_order")
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(isinstance(d, int) and d >= 0 for d in shape):
        raise FormatError(f"invalid shape {shape!r}", field="shape")
    return _DTYPES[descr], shape, end


def load_npy(path) -> np.ndarray:
    """Load a float matrix; values are returned as float64."""
    raw = Path(path).read_bytes()
    dtype, shape, offset = parse_header(raw)
    count = int(np.prod(shape, dtype=np.int64))
    need = count * dtype.itemsize
    if len(raw) - offset < need:
        raise FormatError(
            f"payload holds {len(raw) - offset} bytes, header implies {need}", field="shape"
        )
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=offset)
    return data.reshape(shape).astype(np.float64)
