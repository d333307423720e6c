"""xoshiro256** generator usable from compiled loops, seeded by splitmix64.

State lives in a caller-owned uint64[4] array so a trajectory can be
paused, copied and resumed bit-for-bit.
"""

import numpy as np
from numba import njit

_MASK32 = np.uint64(0xFFFFFFFF)


_M64 = (1 << 64) - 1


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step on Python ints: returns (new state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & _M64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return x, z ^ (z >> 31)


def seed_state(seed: int) -> np.ndarray:
    if not 0 <= seed < 2**64:
        raise ValueError("seed must fit in 64 unsigned bits")
    s = np.empty(4, dtype=np.uint64)
    x = seed
    for k in range(4):
        x, out = splitmix64(x)
        s[k] = out
    return s


def derive_seed(master: int, index: int) -> int:
    """Per-trial seed: splitmix64 of (master, index), stable under adding trials."""
    _, a = splitmix64(master & _M64)
    _, b = splitmix64(a ^ index)
    return b


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def draw_pair(s, n):
    """Ordered pair of distinct indices, uniform over the n(n-1) choices."""
    r = next_u64(s)
    nn = np.uint64(n)
    a = ((r >> np.uint64(32)) * nn) >> np.uint64(32)
    b = ((r & _MASK32) * (nn - np.uint64(1))) >> np.uint64(32)
    if b >= a:
        b += np.uint64(1)
    return np.int64(a), np.int64(b)


@njit(cache=True)
def uniform(s):
    return (next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)
