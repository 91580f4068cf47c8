"""End-to-end profile estimators.

:func:`finalize` turns a quiesced :class:`~profilesketch.sketch.SketchState`
into an estimated profile. :class:`SampledProfile` is the simpler baseline
that keeps exact (capped) counts for a hash-selected subset of elements,
optionally under compressed ids.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import hashing as hs
from .distinct import KmvSketch, kmv_capacity
from .invert import InvertInput, estimate_sample_size, invert_counts
from .sketch import ErrorType, SketchState, bucket_stats

COMPRESSION_C = 64


class SaturationWarning(UserWarning):
    """Every bucket is occupied; the sample-size estimate is clamped."""


@dataclass
class EstimatedProfile:
    phi_hat: dict[int, float]
    tau: int
    error_type: ErrorType
    D_hat: float
    S_hat: float
    m: int = 0
    warnings: list[str] = field(default_factory=list)

    def __getitem__(self, i: int) -> float:
        return self.phi_hat.get(i, 0.0)

    def as_vector(self, length: int | None = None) -> list[float]:
        length = self.tau if length is None else length
        return [self.phi_hat.get(i, 0.0) for i in range(1, length + 1)]


def finalize(st: SketchState) -> EstimatedProfile:
    cfg = st.config
    D_hat = st.kmv.estimate()
    G, b = bucket_stats(st)
    s = estimate_sample_size(G, cfg.B)
    notes = []
    if s.saturated:
        msg = f"all {cfg.B} buckets occupied; sample-size estimate clamped to B ln B"
        warnings.warn(msg, SaturationWarning, stacklevel=2)
        notes.append(msg)
    if s.value == 0.0 or D_hat == 0.0:
        return EstimatedProfile({}, cfg.tau, cfg.error_type, D_hat, s.value, st.t, notes)
    F_hat = invert_counts(InvertInput(cfg.B, s.value, b)).F_hat
    scale = D_hat / s.value
    phi = {i: scale * f for i, f in enumerate(F_hat, start=1) if f > 0.0}
    return EstimatedProfile(phi, cfg.tau, cfg.error_type, D_hat, s.value, st.t, notes)


def dm_sample_size(epsilon: float) -> int:
    return math.ceil(8 * math.log(2 + 1 / epsilon) / epsilon**2)


def dm_cap(epsilon: float) -> int:
    return math.ceil(2 / epsilon)


class SampledProfile:
    """Exact counts for a hash-sampled subset of the distinct elements.

    With ``m`` known each element is kept with probability ``min(1, s/m)``.
    Without it the rate starts at 1 and halves whenever ``t`` exceeds
    ``s / rate``, evicting elements that no longer pass. With
    ``compressed=True`` ids are hashed into ``[0, C s^2)`` and counters stop
    at ``ceil(2/eps)``, past which the id is marked overflowed.
    """

    def __init__(
        self,
        epsilon: float,
        seed: int = 0,
        *,
        m: int | None = None,
        compressed: bool = False,
        sample_size: int | None = None,
    ):
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        self.epsilon = epsilon
        self.s = sample_size or dm_sample_size(epsilon)
        self.cap = dm_cap(epsilon)
        self.compressed = compressed
        self.domain = COMPRESSION_C * self.s * self.s
        self.t = 0
        self._sample_seed = hs.derive_seed(seed, 11)
        self._id_seed = hs.derive_seed(seed, 12)
        self.kmv = KmvSketch(kmv_capacity(epsilon), hs.derive_seed(seed, 13))
        self._fixed = m is not None
        if m is not None:
            rate = min(1.0, self.s / m) if m > 0 else 1.0
            self._threshold = self._rate_threshold(rate)
        else:
            self._threshold = 1 << 64
        self.counts: dict[int, int] = {}
        self.overflow: set[int] = set()
        # sampling hash of the first id seen under each key, used for eviction
        self._keys_hash: dict[int, int] = {}

    @staticmethod
    def _rate_threshold(rate: float) -> int:
        return 1 << 64 if rate >= 1.0 else int(rate * 2.0**64)

    @property
    def rate(self) -> float:
        return self._threshold / 2.0**64

    def _adapt(self) -> None:
        if self._fixed:
            return
        while self.t * (self._threshold / 2.0**64) > self.s:
            self._threshold >>= 1
            keep = self._threshold
            self.counts = {k: c for k, c in self.counts.items() if self._keys_hash[k] < keep}
            self.overflow = {k for k in self.overflow if self._keys_hash[k] < keep}
            self._keys_hash = {k: h for k, h in self._keys_hash.items() if h < keep}

    def extend(self, xs: Iterable[int] | np.ndarray) -> None:
        if not isinstance(xs, np.ndarray):
            xs = np.fromiter((int(x) for x in xs), dtype=np.uint64)
        xs = xs.astype(np.uint64, copy=False)
        if xs.size == 0:
            return
        self.kmv.update_many(xs)
        if self._fixed:
            self._absorb(xs)
            self.t += xs.size
            return
        # the rate only changes at t = s / rate, so split the batch there
        pos = 0
        while pos < xs.size:
            limit = math.floor(self.s / (self._threshold / 2.0**64))
            stop = min(xs.size, max(pos + 1, limit - self.t + pos))
            self._absorb(xs[pos:stop])
            self.t += stop - pos
            pos = stop
            self._adapt()

    def update(self, x: int) -> None:
        self.extend(np.asarray([x], dtype=np.uint64))

    def _absorb(self, xs: np.ndarray) -> None:
        h = hs.hash_u64_array(self._sample_seed, xs)
        if self._threshold < 1 << 64:
            keep = h < np.uint64(self._threshold)
            xs, h = xs[keep], h[keep]
        if xs.size == 0:
            return
        if self.compressed:
            keys = hs.reduce_range_array(hs.hash_u64_array(self._id_seed, xs), self.domain)
        else:
            keys = xs
        uk, first, cnt = np.unique(keys, return_index=True, return_counts=True)
        for k, f, c in zip(uk.tolist(), first.tolist(), cnt.tolist()):
            if k in self.overflow:
                continue
            if k not in self._keys_hash:
                self._keys_hash[k] = int(h[f])
            total = self.counts.get(k, 0) + c
            if self.compressed and total > self.cap:
                self.overflow.add(k)
                self.counts.pop(k, None)
            else:
                self.counts[k] = total

    def sample_size(self) -> int:
        return len(self.counts) + len(self.overflow)

    def estimate(self, D_hat: float | None = None) -> EstimatedProfile:
        D_hat = self.kmv.estimate() if D_hat is None else float(D_hat)
        size = self.sample_size()
        tau = self.cap
        if size == 0 or D_hat == 0.0:
            return EstimatedProfile({}, tau, ErrorType.M, D_hat, float(size), self.t)
        F = [0] * tau
        for c in self.counts.values():
            if c <= tau:
                F[c - 1] += 1
        scale = D_hat / size
        phi = {i: scale * f for i, f in enumerate(F, start=1) if f}
        return EstimatedProfile(phi, tau, ErrorType.M, D_hat, float(size), self.t)


def _as_array(stream) -> np.ndarray:
    if isinstance(stream, np.ndarray):
        return stream.astype(np.uint64, copy=False)
    return np.fromiter((int(x) for x in stream), dtype=np.uint64)


def dm_estimate(stream, epsilon: float, D_hat: float | None = None, seed: int = 0,
                m: int | None = None) -> EstimatedProfile:
    """Rescaled empirical profile of a hash-sampled subset, truncated at ``ceil(2/eps)``."""
    xs = _as_array(stream)
    sp = SampledProfile(epsilon, seed, m=len(xs) if m is None else m)
    sp.extend(xs)
    return sp.estimate(D_hat)


def dm_compressed(stream, epsilon: float, D_hat: float | None = None, seed: int = 0,
                  m: int | None = None) -> EstimatedProfile:
    """:func:`dm_estimate` with ids hashed to ``[0, 64 s^2)`` and capped counters."""
    xs = _as_array(stream)
    sp = SampledProfile(epsilon, seed, m=len(xs) if m is None else m, compressed=True)
    sp.extend(xs)
    return sp.estimate(D_hat)


def exact_head(profile: Mapping[int, int], tau: int) -> dict[int, int]:
    return {i: c for i, c in profile.items() if i <= tau}
