"""Tensor helpers and seeded random streams.

Tensors are plain ``numpy.ndarray`` objects of dtype float64. The helpers
here enforce the package-wide contract that every tensor crossing a public
boundary is real, float64 and finite.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

__all__ = ["as_tensor", "check_same_shape", "RngStream"]


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Return ``x`` as a float64 array, rejecting NaN/Inf entries."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgument(f"{name} contains non-finite entries")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch between {what}: {a.shape} vs {b.shape}")


_TWO_POW_M53 = 2.0**-53


def _shape(shape) -> tuple:
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    return tuple(int(s) for s in shape)


class RngStream:
    """Counter-based random stream (Philox-4x64) with Box-Muller Gaussians.

    Two streams built from the same seed yield bitwise-identical draws. A
    stream is single-owner; parallel work should use :meth:`derive` to get
    independent child streams.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise InvalidArgument(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self._bitgen = np.random.Philox(key=seed, counter=0)

    def derive(self, index: int) -> "RngStream":
        """Child stream keyed by ``(seed, index)``; does not advance this stream."""
        child = np.random.SeedSequence([self.seed, int(index)]).generate_state(1, np.uint64)[0]
        return RngStream(int(child))

    def _raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(n)

    def uniform(self, shape) -> np.ndarray:
        """Uniform draws on [0, 1) with 53 random bits each."""
        shape = _shape(shape)
        n = int(np.prod(shape, dtype=np.int64))
        bits = self._raw(n) >> np.uint64(11)
        return (bits.astype(np.float64) * _TWO_POW_M53).reshape(shape)

    def normal(self, shape) -> np.ndarray:
        """Standard normal draws via the Box-Muller transform."""
        shape = _shape(shape)
        n = int(np.prod(shape, dtype=np.int64))
        pairs = (n + 1) // 2
        u = self.uniform((2, pairs))
        u1 = 1.0 - u[0]  # (0, 1], keeps log finite
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u[1]
        z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return z[:n].reshape(shape)
