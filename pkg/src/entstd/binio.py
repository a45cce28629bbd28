"""Binary container primitives shared by index, checkpoint, and cache files.

Every file starts with a 16-byte header: a 12-byte ASCII kind tag plus a
little-endian u32 format version. Index and model files append a 64-bit
blake2b digest of the payload, verified on load, so truncation or a single
flipped byte is rejected rather than yielding a partial artifact. All
integers and floats are little-endian; float arrays carry an explicit
dtype code (f32 for index rows, f64 for trained parameters) so round-trips
are bitwise.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .errors import DataError

MAGIC_INDEX = b"ENTSTD-INDEX"
MAGIC_MODEL = b"ENTSTD-MODEL"
MAGIC_CACHE = b"ENTSTD-CACHE"
FORMAT_VERSION = 1

_DTYPE_CODES = {b"4": np.dtype("<f4"), b"8": np.dtype("<f8")}


def digest64(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def pack_header(magic: bytes, version: int = FORMAT_VERSION) -> bytes:
    if len(magic) != 12:
        raise ValueError("magic tag must be 12 bytes")
    return magic + struct.pack("<I", version)


def check_header(data: bytes, magic: bytes) -> int:
    """Validate magic and return the format version."""
    if len(data) < 16 or data[:12] != magic:
        raise DataError(f"not a {magic.decode('ascii', 'replace')} file")
    (version,) = struct.unpack_from("<I", data, 12)
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported format version {version}")
    return version


class Writer:
    """Accumulates a payload buffer with typed little-endian appends."""

    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, value: int):
        self._parts.append(struct.pack("<B", value))

    def u32(self, value: int):
        self._parts.append(struct.pack("<I", value))

    def u64(self, value: int):
        self._parts.append(struct.pack("<Q", value))

    def string(self, value: str):
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self._parts.append(raw)

    def float_array(self, values: np.ndarray):
        arr = np.ascontiguousarray(values)
        if arr.dtype == np.float32:
            code = b"4"
        elif arr.dtype == np.float64:
            code = b"8"
        else:
            raise ValueError(f"unsupported array dtype {arr.dtype}")
        self._parts.append(code)
        self.u64(arr.size)
        self._parts.append(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes())

    def payload(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    """Cursor over a payload buffer; raises DataError on overrun."""

    def __init__(self, payload: bytes):
        self._data = payload
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise DataError("corrupted file: payload truncated")
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def u8(self) -> int:
        return struct.unpack("<B", self._take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._take(8))[0]

    def string(self) -> str:
        length = self.u32()
        return self._take(length).decode("utf-8")

    def float_array(self) -> np.ndarray:
        code = self._take(1)
        dtype = _DTYPE_CODES.get(code)
        if dtype is None:
            raise DataError(f"corrupted file: unknown array dtype code {code!r}")
        size = self.u64()
        raw = self._take(size * dtype.itemsize)
        return np.frombuffer(raw, dtype=dtype).copy()

    def done(self) -> bool:
        return self._pos == len(self._data)


def write_container(path, magic: bytes, payload: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(pack_header(magic))
        fh.write(payload)
        fh.write(struct.pack("<Q", digest64(payload)))


def read_container(path, magic: bytes) -> bytes:
    """Read and digest-verify a container, returning the raw payload."""
    with open(path, "rb") as fh:
        data = fh.read()
    check_header(data, magic)
    if len(data) < 24:
        raise DataError("corrupted file: too short")
    payload, stored = data[16:-8], struct.unpack("<Q", data[-8:])[0]
    if digest64(payload) != stored:
        raise DataError("corrupted file: digest mismatch")
    return payload
