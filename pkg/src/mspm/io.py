"""Binary (PSTF) and JSON tensor files.

Binary layout, all integers little-endian::

    b"PSTF" | u16 version=1 | u16 n_blocks | n_blocks * (u16 d_i, u32 m_i) | float64 values

Values follow the package's fixed axis order.  A JSON mirror
``{"blocks": [[d, m], ...], "values": [...]}`` is accepted for small tensors;
``values`` may be flat or nested.
"""
from __future__ import annotations

import json
import os
import struct

import numpy as np

from .exceptions import FormatError
from .tensor import PSTensor, SymmetryType

MAGIC = b"PSTF"
VERSION = 1
_HEADER = struct.Struct("<4sHH")
_BLOCK = struct.Struct("<HI")


def _validate_blocks(blocks) -> SymmetryType:
    try:
        sym = SymmetryType(tuple((int(d), int(m)) for d, m in blocks))
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad block list: {exc}") from None
    for d, m in sym.blocks:
        if d < 1:
            raise FormatError(f"block exponent must be >= 1, got {d}")
        if m < 1:
            raise FormatError(f"block dimension must be >= 1, got {m}")
    return sym


def _build(values: np.ndarray, sym: SymmetryType) -> PSTensor:
    try:
        return PSTensor(values.reshape(sym.shape), sym)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def encode(T: PSTensor) -> bytes:
    sym = T.symmetry
    if any(d < 1 for d in sym.exponents):
        raise ValueError("cannot encode blocks with zero exponent")
    parts = [_HEADER.pack(MAGIC, VERSION, sym.n_blocks)]
    parts += [_BLOCK.pack(d, m) for d, m in sym.blocks]
    parts.append(np.ascontiguousarray(T.values, dtype="<f8").tobytes())
    return b"".join(parts)


def decode(data: bytes) -> PSTensor:
    if len(data) < _HEADER.size:
        raise FormatError("truncated header")
    magic, version, n_blocks = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"unsupported version {version}")
    if n_blocks < 1:
        raise FormatError("tensor must have at least one block")
    pos = _HEADER.size
    if len(data) < pos + n_blocks * _BLOCK.size:
        raise FormatError("truncated block table")
    blocks = []
    for _ in range(n_blocks):
        blocks.append(_BLOCK.unpack_from(data, pos))
        pos += _BLOCK.size
    sym = _validate_blocks(blocks)
    n = sym.size
    payload = data[pos:]
    if len(payload) != 8 * n:
        raise FormatError(f"payload has {len(payload)} bytes, expected {8 * n}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise FormatError("non-finite values in payload")
    return _build(values, sym)


def to_json_obj(T: PSTensor) -> dict:
    return {"blocks": [list(b) for b in T.symmetry.blocks], "values": T.values.reshape(-1).tolist()}


def from_json_obj(obj) -> PSTensor:
    if not isinstance(obj, dict) or "blocks" not in obj or "values" not in obj:
        raise FormatError("JSON tensor needs 'blocks' and 'values'")
    sym = _validate_blocks(obj["blocks"])
    try:
        values = np.asarray(obj["values"], dtype=np.float64).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad values: {exc}") from None
    if values.size != sym.size:
        raise FormatError(f"got {values.size} values, expected {sym.size}")
    if not np.all(np.isfinite(values)):
        raise FormatError("non-finite values")
    return _build(values, sym)


def write_tensor(T: PSTensor, path) -> None:
    """Write ``T`` as PSTF, or as JSON when the path ends in ``.json``."""
    path = os.fspath(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump(to_json_obj(T), fh)
        return
    with open(path, "wb") as fh:
        fh.write(encode(T))


def read_tensor(path) -> PSTensor:
    """Read a PSTF or JSON tensor file.

    The format is detected from the leading bytes.  Any structural problem
    or a symmetry violation beyond ``1e-10`` relative raises
    :class:`~mspm.exceptions.FormatError`.
    """
    with open(os.fspath(path), "rb") as fh:
        data = fh.read()
    if data[:4] == MAGIC:
        return decode(data)
    head = data.lstrip()[:1]
    if head == b"{":
        try:
            obj = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FormatError(f"invalid JSON: {exc}") from None
        return from_json_obj(obj)
    raise FormatError(f"bad magic {data[:4]!r}")
