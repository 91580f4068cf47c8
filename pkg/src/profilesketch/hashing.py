"""Seeded hash primitives.

Everything the sketches need in the way of randomness comes from here: a
64-bit keyed mixing hash (scalar and numpy-vectorized, bit-identical), a
Carter-Wegman polynomial family for limited-independence experiments, the
lowest-set-bit level used for geometric sampling, and an inverse-CDF map from
a uniform real to a Poisson(1) draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
LEVEL_OF_ZERO = 65

_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# 2**61 - 1 is prime and keeps products inside Python ints cheaply.
MERSENNE61 = (1 << 61) - 1


def _mix(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _keys(seed: int) -> tuple[int, int]:
    seed &= MASK64
    return _mix(seed), _mix(seed ^ 0xD6E8FEB86659FD93)


def hash_u64(seed: int, x: int) -> int:
    """Keyed 64-bit hash of a 64-bit integer.

    Two splitmix64 finalizer rounds keyed on both sides. Not cryptographic.
    """
    k1, k2 = _keys(seed)
    return _mix(_mix((x & MASK64) ^ k1) ^ k2)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def hash_u64_array(seed: int, xs: np.ndarray | Sequence[int]) -> np.ndarray:
    """Vectorized :func:`hash_u64`; returns a ``uint64`` array."""
    k1, k2 = _keys(seed)
    xs = np.asarray(xs, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix_array(_mix_array(xs ^ np.uint64(k1)) ^ np.uint64(k2))


def derive_seed(seed: int, *path: int) -> int:
    """Deterministically derive an independent sub-seed from ``seed``."""
    s = seed & MASK64
    for p in path:
        s = hash_u64(s, p)
    return s


def reduce_range(h: int, n: int) -> int:
    """Map a 64-bit hash onto ``[0, n)`` by multiply-high."""
    return (h * n) >> 64


def reduce_range_array(hs: np.ndarray, n: int) -> np.ndarray:
    """Vectorized :func:`reduce_range` (exact, split into 32-bit halves)."""
    if n >= 1 << 32:
        return np.array([reduce_range(int(h), n) for h in hs], dtype=np.uint64)
    hs = np.asarray(hs, dtype=np.uint64)
    n64 = np.uint64(n)
    hi = hs >> np.uint64(32)
    lo = hs & np.uint64(0xFFFFFFFF)
    # (hi*2^32 + lo) * n >> 64 == (hi*n + (lo*n >> 32)) >> 32, all terms < 2^64
    return (hi * n64 + ((lo * n64) >> np.uint64(32))) >> np.uint64(32)


def to_unit(h: int) -> float:
    """Top 53 bits of a 64-bit hash as a real in [0, 1)."""
    return (h >> 11) * (1.0 / (1 << 53))


def lsb_level(v: int) -> int:
    """1-based index of the lowest set bit; 65 for ``v == 0``."""
    v &= MASK64
    if v == 0:
        return LEVEL_OF_ZERO
    return (v & -v).bit_length()


def lsb_level_array(vs: np.ndarray) -> np.ndarray:
    vs = np.asarray(vs, dtype=np.uint64)
    low = vs & (~vs + np.uint64(1))
    out = np.full(vs.shape, LEVEL_OF_ZERO, dtype=np.int64)
    nz = low != 0
    # low is an exact power of two, so log2 is exact in binary64
    out[nz] = np.log2(low[nz].astype(np.float64)).astype(np.int64) + 1
    return out


def _poisson1_cdf(limit: int = 40) -> list[float]:
    cdf, term, acc = [], math.exp(-1.0), 0.0
    for j in range(limit):
        acc += term
        cdf.append(acc)
        term /= j + 1
    return cdf


_POI1_CDF = _poisson1_cdf()


def poisson_unit_draw(u: float) -> int:
    """Inverse-transform Poisson(1) draw: smallest j with CDF(j) > u."""
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u!r}")
    for j, c in enumerate(_POI1_CDF):
        if c > u:
            return j
    return len(_POI1_CDF)


@dataclass(frozen=True)
class KWiseFamily:
    """Polynomial hash ``(sum_j c_j x^j mod p) mod range`` of degree k-1."""

    coefficients: tuple[int, ...]
    prime: int = MERSENNE61
    range: int = MERSENNE61

    def __post_init__(self) -> None:
        if len(self.coefficients) < 2:
            raise ValueError("k-wise family needs k >= 2 coefficients")
        if self.range < 1:
            raise ValueError("range must be positive")
        if any(not 0 <= c < self.prime for c in self.coefficients):
            raise ValueError("coefficients must lie in [0, p)")

    @property
    def k(self) -> int:
        return len(self.coefficients)

    @classmethod
    def from_seed(cls, seed: int, k: int, out_range: int, prime: int = MERSENNE61) -> "KWiseFamily":
        coeffs = tuple(hash_u64(seed, j) % prime for j in range(k))
        return cls(coeffs, prime, out_range)

    def __call__(self, x: int) -> int:
        return kwise_eval(self, x)


def kwise_eval(f: KWiseFamily, x: int) -> int:
    if not 0 <= x < f.prime:
        raise ValueError(f"x={x} outside the field [0, {f.prime})")
    acc = 0
    for c in reversed(f.coefficients):
        acc = (acc * x + c) % f.prime
    return acc % f.range
