"""Length-prefixed binary protocol for denoisers running in a child process.

Request::

    b"RDX1" | u64 payload_len | f64 t | u64 rank | u64 dims[rank] | f64 data[prod(dims)]

Response::

    b"RDX1" | u64 payload_len | u64 rank | u64 dims[rank] | f64 data[prod(dims)]

All integers and floats are little-endian; ``payload_len`` counts the bytes
that follow it.
"""

from __future__ import annotations

import struct
import subprocess

import numpy as np

from .errors import FormatError, InvalidArgument

__all__ = ["encode_request", "encode_response", "read_request", "read_response", "ExternalModel", "serve"]

MAGIC = b"RDX1"


def _tensor_bytes(x: np.ndarray) -> bytes:
    x = np.asarray(x, dtype="<f8")
    head = struct.pack("<Q", x.ndim) + struct.pack(f"<{x.ndim}Q", *x.shape)
    return head + x.tobytes()


def encode_request(t: float, x) -> bytes:
    payload = struct.pack("<d", float(t)) + _tensor_bytes(np.asarray(x))
    return MAGIC + struct.pack("<Q", len(payload)) + payload


def encode_response(x) -> bytes:
    payload = _tensor_bytes(np.asarray(x))
    return MAGIC + struct.pack("<Q", len(payload)) + payload


def _read_exact(stream, n, offset, what):
    buf = stream.read(n)
    if buf is None or len(buf) != n:
        got = 0 if not buf else len(buf)
        raise FormatError(f"truncated {what}: wanted {n} bytes, got {got}", offset + got)
    return buf


def _read_frame(stream):
    """Return the payload bytes of one frame, or ``None`` at a clean EOF."""
    magic = stream.read(4)
    if not magic:
        return None
    if len(magic) < 4 or magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", 0)
    (length,) = struct.unpack("<Q", _read_exact(stream, 8, 4, "length"))
    return _read_exact(stream, length, 12, "payload")


def _parse_tensor(payload: bytes, pos: int, base: int) -> np.ndarray:
    if len(payload) < pos + 8:
        raise FormatError("missing rank", base + pos)
    (rank,) = struct.unpack_from("<Q", payload, pos)
    pos += 8
    if len(payload) < pos + 8 * rank:
        raise FormatError("missing dims", base + pos)
    dims = struct.unpack_from(f"<{rank}Q", payload, pos)
    pos += 8 * rank
    n = int(np.prod(dims, dtype=np.int64))
    if len(payload) != pos + 8 * n:
        raise FormatError(f"payload holds {len(payload) - pos} data bytes, dims need {8 * n}", base + pos)
    return np.frombuffer(payload, dtype="<f8", count=n, offset=pos).astype(np.float64).reshape(dims)


def read_request(stream):
    """Parse one request; returns ``(t, x)`` or ``None`` at EOF."""
    payload = _read_frame(stream)
    if payload is None:
        return None
    if len(payload) < 8:
        raise FormatError("missing time field", 12)
    (t,) = struct.unpack_from("<d", payload, 0)
    return t, _parse_tensor(payload, 8, 12)


def read_response(stream) -> np.ndarray:
    payload = _read_frame(stream)
    if payload is None:
        raise FormatError("stream closed before a response arrived", 0)
    return _parse_tensor(payload, 0, 12)


class ExternalModel:
    """Data-prediction model served by a child process speaking the RDX1 protocol.

    The handle is single-owner: requests are written and answered strictly
    in sequence.
    """

    def __init__(self, command):
        if isinstance(command, str):
            command = command.split()
        self.command = list(command)
        self._proc = subprocess.Popen(self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE)

    def predict(self, x_t, t: float) -> np.ndarray:
        if self._proc.poll() is not None:
            raise RuntimeError(f"external denoiser exited with status {self._proc.returncode}")
        self._proc.stdin.write(encode_request(t, x_t))
        self._proc.stdin.flush()
        out = read_response(self._proc.stdout)
        if out.shape != np.shape(x_t):
            raise InvalidArgument(f"external denoiser returned shape {out.shape}, expected {np.shape(x_t)}")
        return out

    def close(self):
        if self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve(model, schedule, instream, outstream) -> int:
    """Answer requests with ``posterior_mean_x0`` until EOF; returns the request count."""
    from .denoiser import posterior_mean_x0

    count = 0
    while True:
        req = read_request(instream)
        if req is None:
            return count
        t, x = req
        outstream.write(encode_response(posterior_mean_x0(model, x, t, schedule)))
        outstream.flush()
        count += 1
