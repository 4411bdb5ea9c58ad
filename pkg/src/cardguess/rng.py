"""Counter-based random streams.

Every stream is addressed by ``(seed, stream_index)``. Draw ``k`` of a stream
is ``mix64(start + (k + 1) * GOLDEN)`` where ``start`` depends only on the
address, so a replication's random sequence never depends on which worker ran
it or in what order. The pure-Python :class:`RngStream` and the compiled
helpers below implement the identical arithmetic; the test suite checks that
they agree bit for bit.
"""

from __future__ import annotations

import numba
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 2.0**-53


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def stream_start(seed: int, stream: int) -> int:
    """Initial counter state for the stream addressed by ``(seed, stream)``."""
    if not (0 <= seed <= MASK64 and 0 <= stream <= MASK64):
        raise ValueError("seed and stream index must be unsigned 64-bit integers")
    return _mix64(seed ^ _mix64(((stream + 1) * GOLDEN) & MASK64))


class RngStream:
    """A reproducible stream of 64-bit draws identified by ``(seed, stream)``."""

    __slots__ = ("seed", "stream", "_state")

    def __init__(self, seed: int, stream: int = 0) -> None:
        self._state = stream_start(seed, stream)
        self.seed = seed
        self.stream = stream

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"

    def getstate(self) -> int:
        return self._state

    def setstate(self, state: int) -> None:
        self._state = state & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return _mix64(self._state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV53

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)``."""
        if k <= 0:
            raise ValueError("upper bound must be positive")
        return min(int(self.random() * k), k - 1)


# Compiled twins. All arithmetic stays in uint64 so numba never promotes to float.

_G = np.uint64(GOLDEN)
_M1 = np.uint64(_MIX1)
_M2 = np.uint64(_MIX2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)


@numba.njit(cache=True, nogil=True)
def mix64_nb(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True, nogil=True)
def stream_start_nb(seed, stream):
    return mix64_nb(seed ^ mix64_nb((stream + np.uint64(1)) * _G))


@numba.njit(cache=True, nogil=True)
def next_random_nb(state):
    """Advance ``state`` and return ``(new_state, uniform in [0, 1))``."""
    state = state + _G
    return state, np.float64(mix64_nb(state) >> _S11) * _INV53


@numba.njit(cache=True, nogil=True)
def below_nb(u, k):
    i = np.int64(u * k)
    return i if i < k else k - 1
