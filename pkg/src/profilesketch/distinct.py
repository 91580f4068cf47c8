"""Distinct-element counting with k-minimum-values sketches."""

from __future__ import annotations

import bisect
import math

import numpy as np

from .hashing import hash_u64, hash_u64_array

DEFAULT_ACCURACY_CONSTANT = 100
TRACKING_CAPACITY = 64
_TWO64 = float(1 << 64)


def kmv_capacity(epsilon: float, c: float = DEFAULT_ACCURACY_CONSTANT) -> int:
    """Capacity giving relative error about ``epsilon / 10`` when ``c = 100``."""
    return max(2, math.ceil(c / epsilon**2))


class KmvSketch:
    """Keeps the ``k`` smallest distinct hash values seen so far.

    State depends only on the *set* of inserted ids, so it is invariant to
    stream order and duplication.
    """

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 2:
            raise ValueError("KMV capacity must be at least 2")
        self.capacity = int(capacity)
        self.seed = int(seed)
        self._mins: list[int] = []

    @property
    def values(self) -> list[int]:
        return list(self._mins)

    def __len__(self) -> int:
        return len(self._mins)

    @property
    def full(self) -> bool:
        return len(self._mins) >= self.capacity

    @property
    def threshold(self) -> int | None:
        """Largest retained hash once full; any smaller hash may enter."""
        return self._mins[-1] if self.full else None

    def offer_hash(self, h: int) -> bool:
        """Insert a raw hash value. Returns True if the retained set changed."""
        mins = self._mins
        if len(mins) >= self.capacity and h >= mins[-1]:
            return False
        i = bisect.bisect_left(mins, h)
        if i < len(mins) and mins[i] == h:
            return False
        mins.insert(i, h)
        if len(mins) > self.capacity:
            mins.pop()
        return True

    def update(self, x: int) -> bool:
        return self.offer_hash(hash_u64(self.seed, x))

    def update_many(self, xs: np.ndarray) -> None:
        hs = hash_u64_array(self.seed, xs)
        if self.full:
            hs = hs[hs < np.uint64(self._mins[-1])]
        if hs.size == 0:
            return
        merged = np.union1d(hs, np.asarray(self._mins, dtype=np.uint64))
        self._mins = [int(v) for v in merged[: self.capacity]]

    def estimate(self) -> float:
        if not self.full:
            return float(len(self._mins))
        v_k = self._mins[-1] / _TWO64
        if v_k <= 0.0:
            return float(self.capacity)
        return (self.capacity - 1) / v_k

    def nbytes(self) -> int:
        return 8 * len(self._mins)


class TrackingDistinct(KmvSketch):
    """Small-capacity KMV read after every update for level scheduling."""

    def __init__(self, seed: int = 0, capacity: int = TRACKING_CAPACITY):
        super().__init__(capacity, seed)


def distinct_update(sk: KmvSketch, x: int) -> None:
    sk.update(x)


def distinct_estimate(sk: KmvSketch) -> float:
    return sk.estimate()
