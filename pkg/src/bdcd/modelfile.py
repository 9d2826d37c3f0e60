"""The .bdcm portable model file: save, load, and header inspection.

Layout, all integers little-endian:

    magic   4 bytes  "BDCM"
    version u16      (currently 1)
    hdr_len u32
    header  UTF-8 JSON: format_version, dtype, class_labels, input_shape,
            arch, layers (kind + hyperparameters + parameter shapes in
            blob order)
    blobs   per parameter tensor, in layer order (weights then bias):
            u64 byte length, then raw float32 values
    footer  u32 CRC32 (IEEE) over every preceding byte

Saving is byte-deterministic for a given model.  On load, structural
damage that plain missing bytes cannot explain is re-attributed to
corruption whenever the checksum disagrees, so any single-byte flip
reports :class:`ModelCorruptionError` while a truncated file reports
:class:`ModelFormatError`.
"""

from __future__ import annotations

import hashlib
import json
import struct
import zlib
from pathlib import Path
from typing import Optional

import numpy as np

from . import layers
from .errors import ModelCorruptionError, ModelFormatError, ModelVersionError
from .layers import LayerParams
from .model import ModelSpec

MAGIC = b"BDCM"
FORMAT_VERSION = 1
FILE_SUFFIX = ".bdcm"

_FIXED = struct.Struct("<4sHI")   # magic, version, header length
_BLOB_LEN = struct.Struct("<Q")
_CRC = struct.Struct("<I")


def _layer_descriptor(lp: LayerParams) -> dict:
    params = []
    if lp.weights is not None:
        params.append({"name": "weights", "shape": [int(d) for d in lp.weights.shape]})
    if lp.bias is not None:
        params.append({"name": "bias", "shape": [int(d) for d in lp.bias.shape]})
    return {"kind": lp.kind, "hyper": lp.hyper, "params": params}


def _header_bytes(model: ModelSpec) -> bytes:
    header = {
        "format_version": FORMAT_VERSION,
        "dtype": "f32",
        "class_labels": list(model.class_labels),
        "input_shape": [int(d) for d in model.input_shape],
        "arch": model.arch,
        "layers": [_layer_descriptor(lp) for lp in model.layers],
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_model(model: ModelSpec, path) -> None:
    """Serialize the model; identical models produce identical bytes."""
    header = _header_bytes(model)
    chunks = [_FIXED.pack(MAGIC, FORMAT_VERSION, len(header)), header]
    for lp in model.layers:
        for arr in (lp.weights, lp.bias):
            if arr is None:
                continue
            blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
            chunks.append(_BLOB_LEN.pack(len(blob)))
            chunks.append(blob)
    body = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(_CRC.pack(zlib.crc32(body)))


def _crc_ok(data: bytes) -> bool:
    if len(data) < _CRC.size:
        return False
    return zlib.crc32(data[:-4]) == _CRC.unpack(data[-4:])[0]


def _parse_header(data: bytes):
    """Fixed fields + header JSON; raises ModelFormatError on any damage."""
    if len(data) < _FIXED.size + _CRC.size:
        raise ModelFormatError("file too short to be a model file")
    magic, version, hdr_len = _FIXED.unpack_from(data, 0)
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported format version {version}")
    start = _FIXED.size
    raw = data[start:start + hdr_len]
    if len(raw) != hdr_len:
        raise ModelFormatError("header extends past end of file")
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict) or "layers" not in header:
        raise ModelFormatError("header missing layer descriptors")
    return header, start + hdr_len


def _expected_blob_sizes(header: dict) -> list[tuple[list[int], int]]:
    sizes = []
    try:
        for desc in header["layers"]:
            for p in desc["params"]:
                shape = [int(d) for d in p["shape"]]
                if not shape or any(d < 1 for d in shape):
                    raise ModelFormatError(f"invalid parameter shape {shape}")
                sizes.append((shape, 4 * int(np.prod(shape))))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed layer descriptors: {exc}") from exc
    return sizes


def _rebuild_layer(desc: dict, arrays: list[np.ndarray]) -> LayerParams:
    kind = desc.get("kind")
    it = iter(arrays)
    if kind == "conv2d":
        return layers.conv2d(next(it), next(it), desc["hyper"]["stride"],
                             desc["hyper"]["padding"])
    if kind == "dense":
        return layers.dense(next(it), next(it))
    if kind == "maxpool":
        return layers.maxpool()
    if kind == "dropout":
        return layers.dropout(desc["hyper"]["rate"])
    if kind == "relu":
        return layers.relu_layer()
    if kind == "flatten":
        return layers.flatten_layer()
    if kind == "softmax":
        return layers.softmax_layer()
    raise ModelFormatError(f"unknown layer kind {kind!r}")


class _Truncated(ModelFormatError):
    """Internal marker: bytes are missing, so the checksum proves nothing."""


def load_model(path) -> ModelSpec:
    """Read and verify a .bdcm file back into a ModelSpec."""
    data = Path(path).read_bytes()
    try:
        header, offset = _parse_header(data)
        sizes = _expected_blob_sizes(header)
    except ModelFormatError:
        # a failed checksum explains structural damage better than "bad file"
        if not _crc_ok(data):
            raise ModelCorruptionError("checksum mismatch: file is corrupted") from None
        raise
    payload_end = len(data) - _CRC.size
    arrays = []
    try:
        for shape, nbytes in sizes:
            if offset + _BLOB_LEN.size > payload_end:
                raise _Truncated(f"file ends inside blob table at offset {offset}")
            (declared,) = _BLOB_LEN.unpack_from(data, offset)
            offset += _BLOB_LEN.size
            if declared != nbytes:
                raise ModelFormatError(f"blob length {declared} does not match shape {shape}")
            if offset + nbytes > payload_end:
                raise _Truncated(f"file truncated mid-blob: {len(data)} bytes on disk")
            arrays.append(np.frombuffer(data, dtype="<f4", count=nbytes // 4,
                                        offset=offset).reshape(shape).copy())
            offset += nbytes
        if offset != payload_end:
            raise ModelFormatError(f"{payload_end - offset} trailing bytes after blobs")
    except _Truncated:
        raise
    except ModelFormatError:
        if not _crc_ok(data):
            raise ModelCorruptionError("checksum mismatch: file is corrupted") from None
        raise
    if not _crc_ok(data):
        raise ModelCorruptionError("checksum mismatch: file is corrupted")

    try:
        spec_layers = []
        cursor = iter(arrays)
        for desc in header["layers"]:
            need = len(desc["params"])
            spec_layers.append(_rebuild_layer(desc, [next(cursor) for _ in range(need)]))
        built = ModelSpec(spec_layers, tuple(header["input_shape"]),
                          tuple(header["class_labels"]), header.get("arch", ""))
    except ModelFormatError:
        raise
    except Exception as exc:
        raise ModelFormatError(f"header inconsistent with parameter blobs: {exc}") from exc
    return built


def model_info(path) -> dict:
    """Header JSON plus parameter count, file size, and header hash.

    Reads only the fixed fields and header; parameter blobs stay on disk.
    """
    p = Path(path)
    with open(p, "rb") as fh:
        fixed = fh.read(_FIXED.size)
        if len(fixed) < _FIXED.size:
            raise ModelFormatError("file too short to be a model file")
        magic, version, hdr_len = _FIXED.unpack(fixed)
        if magic != MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ModelVersionError(f"unsupported format version {version}")
        raw = fh.read(hdr_len)
    if len(raw) != hdr_len:
        raise ModelFormatError("header extends past end of file")
    try:
        header = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"header is not valid JSON: {exc}") from exc
    total_params = sum(int(np.prod([int(d) for d in prm["shape"]]))
                       for desc in header.get("layers", []) for prm in desc.get("params", []))
    info = dict(header)
    info["parameter_count"] = total_params
    info["file_size"] = p.stat().st_size
    info["model_id"] = hashlib.sha256(raw).hexdigest()[:16]
    return info
