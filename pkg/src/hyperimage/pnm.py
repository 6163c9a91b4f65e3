"""Minimal PGM (portable graymap) reader and writer.

Only greyscale is supported: ``P5`` (binary) and ``P2`` (plain text), 8 or
16 bit.  16-bit samples are big-endian as required by the netpbm format.
"""

from __future__ import annotations

import os

import numpy as np

_WHITESPACE = b" \t\r\n\v\f"


class PGMFormatError(ValueError):
    """Malformed PGM data; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int, path=None):
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message} (byte offset {offset})")
        self.offset = offset
        self.path = path


def _skip_space(buf: bytes, pos: int) -> int:
    while pos < len(buf):
        ch = buf[pos : pos + 1]
        if ch == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch in _WHITESPACE and ch:
            pos += 1
        else:
            break
    return pos


def _read_int(buf: bytes, pos: int, what: str, path=None):
    pos = _skip_space(buf, pos)
    start = pos
    while pos < len(buf) and buf[pos : pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise PGMFormatError(f"expected {what}", start, path)
    return int(buf[start:pos]), pos


def parse_pgm(buf: bytes, path=None) -> np.ndarray:
    if len(buf) < 2 or buf[:1] != b"P" or buf[1:2] not in (b"2", b"5"):
        raise PGMFormatError("missing P5/P2 magic number", 0, path)
    binary = buf[1:2] == b"5"
    pos = 2
    dims_at = _skip_space(buf, pos)
    width, pos = _read_int(buf, pos, "width", path)
    height, pos = _read_int(buf, pos, "height", path)
    maxval_at = _skip_space(buf, pos)
    maxval, pos = _read_int(buf, pos, "maxval", path)
    if width <= 0 or height <= 0:
        raise PGMFormatError("image dimensions must be positive", dims_at, path)
    if not 0 < maxval < 65536:
        raise PGMFormatError(f"maxval {maxval} outside 1..65535", maxval_at, path)
    n = width * height
    if binary:
        if pos >= len(buf) or buf[pos : pos + 1] not in _WHITESPACE:
            raise PGMFormatError("expected single whitespace after maxval", pos, path)
        pos += 1
        dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
        need = n * dtype.itemsize
        if len(buf) - pos < need:
            raise PGMFormatError(f"truncated raster: need {need} bytes, have {len(buf) - pos}", len(buf), path)
        data = np.frombuffer(buf, dtype=dtype, count=n, offset=pos).astype(np.int64)
        offsets = pos + dtype.itemsize * np.arange(n)
    else:
        values = []
        offsets = []
        for _ in range(n):
            offsets.append(_skip_space(buf, pos))
            v, pos = _read_int(buf, pos, "sample", path)
            values.append(v)
        data = np.array(values, dtype=np.int64)
    bad = np.flatnonzero(data > maxval)
    if bad.size:
        i = int(bad[0])
        raise PGMFormatError(f"sample {data[i]} exceeds maxval {maxval}", int(offsets[i]), path)
    return data.reshape(height, width)


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    return parse_pgm(buf, path=os.fspath(path))


def write_pgm(path, data, maxval: int | None = None) -> None:
    """Write integer samples as binary PGM (P5); 16 bit when ``maxval > 255``."""
    arr = np.asarray(data)
    if arr.ndim != 2:
        raise ValueError("PGM data must be 2-D")
    if maxval is None:
        maxval = 255 if arr.max(initial=0) <= 255 else 65535
    if arr.min(initial=0) < 0 or arr.max(initial=0) > maxval:
        raise ValueError(f"samples must lie in 0..{maxval}")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())
