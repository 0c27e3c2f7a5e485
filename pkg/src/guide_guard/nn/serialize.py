"""Versioned binary model container.

Layout (all integers little-endian)::

    b"GGRD"                     magic
    u16                         format version
    u32 + bytes                 JSON header: input shape, layer specs,
                                encoding weights and their fingerprint
    u32                         number of parameter blobs
    per blob: u8 ndim, ndim x u32 extents, float64 '<f8' values
    32 bytes                    SHA-256 of everything above
"""

from __future__ import annotations

import hashlib
import json
import struct
import warnings
from pathlib import Path

import numpy as np

from ..errors import CorruptFile, VersionMismatch
from ..seqcore import EncodingWeights
from .layers import spec_from_dict, spec_to_dict
from .model import Model

MAGIC = b"GGRD"
FORMAT_VERSION = 1
_DIGEST = 32


class FingerprintWarning(UserWarning):
    """Model was trained with a different encoding configuration."""


def model_to_bytes(model: Model) -> bytes:
    header = {
        "input_shape": list(model.input_shape),
        "layers": [spec_to_dict(s) for s in model.specs],
        "encoding": model.encoding.to_dict() if model.encoding else None,
        "encoding_fingerprint": model.encoding.fingerprint() if model.encoding else None,
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    out = bytearray(MAGIC)
    out += struct.pack("<HI", FORMAT_VERSION, len(hbytes))
    out += hbytes
    params = model.parameters()
    out += struct.pack("<I", len(params))
    for p in params:
        out += struct.pack("<B", p.ndim)
        out += struct.pack(f"<{p.ndim}I", *p.shape)
        out += np.ascontiguousarray(p, dtype="<f8").tobytes()
    out += hashlib.sha256(out).digest()
    return bytes(out)


def save_model(model: Model, path: str | Path) -> str:
    """Write ``model`` to ``path``; returns the file's SHA-256 hex digest."""
    blob = model_to_bytes(model)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


class _Reader:
    def __init__(self, buf: bytes):
        self.buf, self.pos = buf, 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptFile("model file is truncated")
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def model_from_bytes(buf: bytes, expected_fingerprint: str | None = None) -> Model:
    if len(buf) < len(MAGIC) + _DIGEST or buf[:4] != MAGIC:
        raise CorruptFile("not a Guide-Guard model file (bad magic or too short)")
    body, digest = buf[:-_DIGEST], buf[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptFile("model file checksum mismatch")
    r = _Reader(body)
    r.take(4)
    (version,) = r.unpack("<H")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, this build reads {FORMAT_VERSION}")
    (hlen,) = r.unpack("<I")
    try:
        header = json.loads(r.take(hlen))
        specs = [spec_from_dict(d) for d in header["layers"]]
        enc = EncodingWeights.from_dict(header["encoding"]) if header["encoding"] else None
        model = Model(specs, tuple(header["input_shape"]), encoding=enc)
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptFile(f"unreadable model header: {exc}") from exc
    (n,) = r.unpack("<I")
    arrays = []
    for _ in range(n):
        (ndim,) = r.unpack("<B")
        shape = r.unpack(f"<{ndim}I")
        count = int(np.prod(shape))
        arrays.append(np.frombuffer(r.take(8 * count), dtype="<f8").astype(np.float64).reshape(shape))
    if r.pos != len(body):
        raise CorruptFile("trailing bytes after parameter blobs")
    try:
        model.set_parameters(arrays)
    except ValueError as exc:
        raise CorruptFile(str(exc)) from exc
    stored = header.get("encoding_fingerprint")
    if expected_fingerprint is not None and stored != expected_fingerprint:
        warnings.warn(
            f"model encoding fingerprint {stored} differs from expected {expected_fingerprint}",
            FingerprintWarning,
            stacklevel=3,
        )
    return model


def load_model(path: str | Path, expected_fingerprint: str | None = None) -> Model:
    return model_from_bytes(Path(path).read_bytes(), expected_fingerprint)
