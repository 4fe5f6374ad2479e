"""Little-endian float64 model files shared by the persisted model types."""

from __future__ import annotations

from pathlib import Path

import numpy as np

_F8 = np.dtype("<f8")
_I8 = np.dtype("<i8")


def write_arrays(path, ints, floats, arrays) -> None:
    with open(path, "wb") as fh:
        fh.write(np.asarray(ints, dtype=_I8).tobytes())
        fh.write(np.asarray(floats, dtype=_F8).tobytes())
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype=_F8).tobytes())


class Reader:
    def __init__(self, path):
        self.path = Path(path)
        self.buf = self.path.read_bytes()
        self.pos = 0

    def _take(self, dtype, count):
        nbytes = dtype.itemsize * count
        if self.pos + nbytes > len(self.buf):
            raise ValueError(f"{self.path}: file truncated")
        out = np.frombuffer(self.buf, dtype=dtype, count=count, offset=self.pos)
        self.pos += nbytes
        return out.astype(dtype.newbyteorder("="))

    def ints(self, count):
        return [int(v) for v in self._take(_I8, count)]

    def floats(self, count):
        return self._take(_F8, count)

    def matrix(self, rows, cols):
        return self._take(_F8, rows * cols).reshape(rows, cols)

    def done(self):
        if self.pos != len(self.buf):
            raise ValueError(f"{self.path}: {len(self.buf) - self.pos} trailing bytes")
