"""Deterministic random streams: splitmix64 key derivation + xoshiro256** output.

Every random quantity in this package comes out of a :class:`RandomStream`.
A stream is identified by a single 64-bit key. The 256-bit generator state is
expanded from the key with the splitmix64 sequence, and raw output is produced
by xoshiro256** (Blackman/Vigna). Both algorithms are implemented here, in
full, so the byte stream is a property of this package and not of any library
version.

Keys for sub-experiments are derived from a master seed and a list of integer
labels (e.g. ``[measure_label, m, trial]``). Each label is avalanched into the
key with the splitmix64 finalizer, so extending a grid or adding trials never
perturbs streams that already exist.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15

# uniform doubles use the top 53 bits of each 64-bit word
_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer: a 64-bit avalanche (every input bit affects every output bit)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_key(master_seed: int, labels: tuple[int, ...] | list[int] = ()) -> int:
    """Mix a master seed and a label path into a single 64-bit stream key.

    ``key = mix64(seed)`` folded with ``key = mix64(key ^ mix64(label))`` for
    each label in order. Negative labels are taken mod 2**64.
    """
    key = mix64(master_seed & _MASK64)
    for lab in labels:
        key = mix64(key ^ mix64(int(lab) & _MASK64))
    return key


def _expand_state(key: int) -> np.ndarray:
    """Expand a 64-bit key into the 4x64-bit xoshiro256** state via splitmix64."""
    words = []
    s = key & _MASK64
    for _ in range(4):
        s = (s + _SPLITMIX_GAMMA) & _MASK64
        words.append(mix64(s))
    if not any(words):  # all-zero state is the one inadmissible seed
        words[3] = _SPLITMIX_GAMMA
    return np.array(words, dtype=np.uint64)


@numba.njit(numba.void(numba.uint64[:], numba.uint64[:]), cache=True)
def _xoshiro_fill(state, out):  # pragma: no cover - exercised via RandomStream
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    for i in range(out.shape[0]):
        x = s1 * np.uint64(5)
        out[i] = ((x << np.uint64(7)) | (x >> np.uint64(57))) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = (s3 << np.uint64(45)) | (s3 >> np.uint64(19))
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3


@dataclass
class RandomStream:
    """Single-owner xoshiro256** stream. Not thread-safe; derive one per job.

    Output depends only on the key (and hence only on the master seed and the
    derivation path), never on call granularity: asking for 10+90 words equals
    asking for 100.
    """

    key: int
    _state: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.key = int(self.key) & _MASK64
        self._state = _expand_state(self.key)

    @classmethod
    def from_seed(cls, master_seed: int, labels: tuple[int, ...] | list[int] = ()) -> "RandomStream":
        return cls(derive_key(master_seed, labels))

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words."""
        out = np.empty(int(n), dtype=np.uint64)
        _xoshiro_fill(self._state, out)
        return out

    def uniform(self, n: int) -> np.ndarray:
        """Next ``n`` doubles, uniform on [0, 1): top 53 bits of each word."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def integers(self, n: int, bound: int) -> np.ndarray:
        """Next ``n`` integers uniform on {0, ..., bound-1}, as floor(bound * u)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return np.minimum((self.uniform(n) * bound).astype(np.int64), bound - 1)


def derive_stream(master_seed: int, labels: tuple[int, ...] | list[int] = ()) -> RandomStream:
    """Stream for the given master seed and label path (see :func:`derive_key`)."""
    return RandomStream.from_seed(master_seed, labels)
