"""Streaming update path of the profile sketch.

Each element is hashed to a geometric sampling level (lowest set bit of
``g1(x)``); elements at or above the current level are compressed to a short
id ``g2(x)`` in ``[0, T)``, replicated ``z(g2(x)) ~ Poisson(1)`` times, and
each copy bumps a per-level counter in bucket ``h_i(g2(x))``. The current
level rises as the stream grows so that roughly ``B / K`` to ``2B / K``
distinct elements stay sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, NamedTuple

import numpy as np

from . import hashing as hs
from .distinct import KmvSketch, TrackingDistinct, kmv_capacity

# Constant factors for the Theta(.) parameters. See SketchConfig.for_epsilon.
B_CONST_D = 64.0
B_CONST_M = 64.0
DEFAULT_K = 16.0
DEFAULT_TAU_D = 4
T_FACTOR = 64
DOMAIN_BOUND = 1 << 64


class ErrorType(str, Enum):
    D = "D"
    M = "M"

    @classmethod
    def parse(cls, value: "str | ErrorType") -> "ErrorType":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"error type must be 'D' or 'm', got {value!r}") from None


@dataclass(frozen=True)
class SketchConfig:
    epsilon: float
    error_type: ErrorType
    B: int
    tau: int
    H: int
    T: int
    K: float
    seed: int = 0
    n: int = DOMAIN_BOUND
    advance_levels: bool = True
    hash_backend: str = "prf"
    kwise_k: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "error_type", ErrorType.parse(self.error_type))
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.B < 1:
            raise ValueError("B must be at least 1")
        if self.tau < 1:
            raise ValueError("tau must be at least 1")
        if self.H < 2:
            raise ValueError("H must be at least 2")
        if self.T < self.B * self.B:
            raise ValueError("T must be at least B**2")
        if not self.K > 0:
            raise ValueError("K must be positive")
        if self.n < 1:
            raise ValueError("domain bound n must be positive")
        if self.hash_backend not in ("prf", "kwise"):
            raise ValueError(f"unknown hash backend {self.hash_backend!r}")

    @classmethod
    def for_epsilon(
        cls,
        epsilon: float,
        error_type: "str | ErrorType" = ErrorType.D,
        tau: int | None = None,
        seed: int = 0,
        *,
        B: int | None = None,
        K: float = DEFAULT_K,
        **kw,
    ) -> "SketchConfig":
        """Config with the package's default constants for a target error.

        Type D: ``B = ceil(64/eps^2)``, ``tau`` caller-chosen (default 4).
        Type M: ``B = ceil(64 ln(2 + 1/eps)/eps^2)``, ``tau = ceil(2/eps)``.
        ``K = 16`` keeps the expected sample at or below ``B / 8``.
        """
        if not 0.0 < epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        et = ErrorType.parse(error_type)
        if B is None:
            if et is ErrorType.D:
                B = math.ceil(B_CONST_D / epsilon**2)
            else:
                B = math.ceil(B_CONST_M * math.log(2 + 1 / epsilon) / epsilon**2)
        if tau is None:
            tau = DEFAULT_TAU_D if et is ErrorType.D else math.ceil(2 / epsilon)
        H = math.ceil(2 * math.log2(max(B, 2))) + 4
        return cls(epsilon, et, B, tau, H, T_FACTOR * B * B, K, seed, **kw)

    def with_seed(self, seed: int) -> "SketchConfig":
        return replace(self, seed=seed)


class BucketEntry(NamedTuple):
    level: int
    count: int
    saturated: bool


class BucketArray:
    """``B`` buckets, each a small ``{level: counter}`` map.

    Counters stop at ``tau + 1``, which marks them saturated.
    """

    __slots__ = ("buckets", "tau")

    def __init__(self, B: int, tau: int):
        self.buckets: list[dict[int, int]] = [{} for _ in range(B)]
        self.tau = tau

    def __len__(self) -> int:
        return len(self.buckets)

    def entries(self, a: int) -> list[BucketEntry]:
        cap = self.tau + 1
        return [BucketEntry(l, c, c == cap) for l, c in sorted(self.buckets[a].items())]

    def snapshot(self) -> list[tuple[tuple[int, int], ...]]:
        return [tuple(sorted(b.items())) for b in self.buckets]

    def shift_down(self) -> None:
        """Decrement every level, dropping entries that fall below zero."""
        for a, bucket in enumerate(self.buckets):
            if bucket:
                self.buckets[a] = {l - 1: c for l, c in bucket.items() if l > 0}

    def nbytes(self) -> int:
        """Rough packed size: one byte per bucket header plus per-entry fields."""
        count_bytes = max(1, math.ceil(math.log2(self.tau + 2) / 8))
        return len(self.buckets) + sum(len(b) for b in self.buckets) * (1 + count_bytes)


def increment_counters(arr: BucketArray, buckets: Iterable[int], level: int, tau: int) -> None:
    """Add one copy at ``level`` to each listed bucket, capping counters at ``tau + 1``."""
    cap = tau + 1
    for a in buckets:
        bucket = arr.buckets[a]
        c = bucket.get(level)
        if c is None:
            bucket[level] = 1
        elif c < cap:
            bucket[level] = c + 1


class _HashSuite:
    """The sampling, compression, replication and placement hashes of one sketch."""

    def __init__(self, cfg: SketchConfig):
        s = cfg.seed
        self.B, self.T, self.H = cfg.B, cfg.T, cfg.H
        self.g1_seed = hs.derive_seed(s, 1)
        self.g2_seed = hs.derive_seed(s, 2)
        self.z_seed = hs.derive_seed(s, 3)
        self.h_seeds = [hs.derive_seed(s, 4, i) for i in range(cfg.H)]
        self.kwise = cfg.hash_backend == "kwise"
        if self.kwise:
            k = cfg.kwise_k
            p = hs.MERSENNE61
            self._g1 = hs.KWiseFamily.from_seed(self.g1_seed, k, p)
            self._g2 = hs.KWiseFamily.from_seed(self.g2_seed, k, cfg.T)
            self._z = hs.KWiseFamily.from_seed(self.z_seed, k, 1 << 53)
            self._h = [hs.KWiseFamily.from_seed(sd, k, cfg.B) for sd in self.h_seeds]

    def level(self, x: int) -> int:
        if self.kwise:
            return hs.lsb_level(self._g1(x % hs.MERSENNE61))
        return hs.lsb_level(hs.hash_u64(self.g1_seed, x))

    def levels(self, xs: np.ndarray) -> np.ndarray:
        return hs.lsb_level_array(hs.hash_u64_array(self.g1_seed, xs))

    def placements(self, x: int) -> list[int]:
        """Buckets receiving the Poisson copies of ``x`` (possibly none)."""
        if self.kwise:
            xp = self._g2(x % hs.MERSENNE61)
            u = self._z(xp) / float(1 << 53)
            copies = min(hs.poisson_unit_draw(u), self.H)
            return [self._h[i](xp) for i in range(copies)]
        xp = hs.reduce_range(hs.hash_u64(self.g2_seed, x), self.T)
        copies = min(hs.poisson_unit_draw(hs.to_unit(hs.hash_u64(self.z_seed, xp))), self.H)
        return [hs.reduce_range(hs.hash_u64(self.h_seeds[i], xp), self.B) for i in range(copies)]


@dataclass
class SketchState:
    config: SketchConfig
    array: BucketArray = field(init=False)
    level_cur: int = field(init=False, default=1)
    t: int = field(init=False, default=0)
    kmv: KmvSketch = field(init=False)
    tracker: TrackingDistinct = field(init=False)

    def __post_init__(self) -> None:
        cfg = self.config
        self.array = BucketArray(cfg.B, cfg.tau)
        self.kmv = KmvSketch(kmv_capacity(cfg.epsilon), hs.derive_seed(cfg.seed, 5))
        self.tracker = TrackingDistinct(hs.derive_seed(cfg.seed, 6))
        self._hashes = _HashSuite(cfg)
        self._d_tilde = 0.0

    @property
    def d_tilde(self) -> float:
        return self._d_tilde

    # -- level schedule -------------------------------------------------

    def _should_advance(self, t: int, d_tilde: float) -> bool:
        cfg = self.config
        if not cfg.advance_levels:
            return False
        p = 2.0**self.level_cur
        if cfg.error_type is ErrorType.M:
            return p < min(t * cfg.K / cfg.B, cfg.n)
        return p < d_tilde * cfg.K / cfg.B

    def _next_m_trigger(self) -> int | None:
        """Smallest stream length t at which the type-M trigger fires at the current level."""
        cfg = self.config
        p = 2.0**self.level_cur
        if not p < cfg.n:
            return None
        t = max(1, math.floor(p * cfg.B / cfg.K) - 2)
        while not p < t * cfg.K / cfg.B:
            t += 1
        return t

    def advance_level(self) -> None:
        self.level_cur += 1
        self.array.shift_down()

    # -- updates --------------------------------------------------------

    def _insert(self, x: int, level: int) -> None:
        if level < self.level_cur:
            return
        targets = self._hashes.placements(x)
        if targets:
            increment_counters(self.array, targets, level - self.level_cur, self.config.tau)

    def update(self, x: int) -> None:
        x = int(x)
        self.t += 1
        self.kmv.update(x)
        if self.tracker.update(x):
            self._d_tilde = self.tracker.estimate()
        if self._should_advance(self.t, self._d_tilde):
            self.advance_level()
        self._insert(x, self._hashes.level(x))

    def extend(self, xs: Iterable[int] | np.ndarray) -> None:
        """Apply a batch of updates; the resulting state equals repeated :meth:`update`."""
        if not isinstance(xs, np.ndarray):
            xs = np.fromiter((int(x) for x in xs), dtype=np.uint64)
        xs = xs.astype(np.uint64, copy=False)
        n = len(xs)
        if n == 0:
            return
        if self._hashes.kwise:
            for x in xs.tolist():
                self.update(x)
            return

        self.kmv.update_many(xs)
        t0 = self.t
        changes = self._tracker_changes(xs)

        # positions (0-based within batch) where the level rises
        advances: list[int] = []
        level0 = self.level_cur
        if self.config.advance_levels:
            if self.config.error_type is ErrorType.M:
                pos = 0
                while pos < n:
                    t_fire = self._next_m_trigger()
                    if t_fire is None:
                        break
                    pos = max(pos, t_fire - t0 - 1)
                    if pos >= n:
                        break
                    advances.append(pos)
                    self.level_cur += 1
                    pos += 1
            else:
                bounds = [p for p, _ in changes] + [n]
                d = self._d_tilde
                seg_start = 0
                for k, seg_end in enumerate(bounds):
                    pos = seg_start
                    while pos < seg_end and self._should_advance(t0 + pos + 1, d):
                        advances.append(pos)
                        self.level_cur += 1
                        pos += 1
                    if k < len(changes):
                        d = changes[k][1]
                    seg_start = seg_end
            self.level_cur = level0
        if changes:
            self._d_tilde = changes[-1][1]

        adv = np.asarray(advances, dtype=np.int64)
        levels = self._hashes.levels(xs)
        level_at = level0 + np.searchsorted(adv, np.arange(n), side="right")
        sampled = np.flatnonzero(levels >= level_at)

        adv_set = set(advances)
        events = sorted(adv_set.union(sampled.tolist()))
        sampled_set = set(sampled.tolist())
        for p in events:
            if p in adv_set:
                self.advance_level()
            if p in sampled_set:
                self._insert(int(xs[p]), int(levels[p]))
        self.t = t0 + n

    def _tracker_changes(self, xs: np.ndarray) -> list[tuple[int, float]]:
        """Feed the tracker; return (position, new estimate) wherever it changed."""
        tr = self.tracker
        th = hs.hash_u64_array(tr.seed, xs)
        if tr.full:
            idx = np.flatnonzero(th < np.uint64(tr.threshold))
        else:
            idx = np.arange(len(xs))
        if idx.size == 0:
            return []
        _, first = np.unique(th[idx], return_index=True)
        cand = np.sort(idx[first])
        out = []
        for p in cand.tolist():
            if tr.offer_hash(int(th[p])):
                out.append((p, tr.estimate()))
        return out

    def nbytes(self) -> int:
        return self.array.nbytes() + self.kmv.nbytes() + self.tracker.nbytes() + 16


def sketch_new(cfg: SketchConfig) -> SketchState:
    return SketchState(cfg)


def sketch_update(st: SketchState, x: int) -> None:
    st.update(x)


def bucket_stats(st: SketchState | BucketArray) -> tuple[int, list[int]]:
    """Occupied-bucket count ``G`` and histogram ``b[i-1]`` of bucket totals ``i <= tau``.

    Buckets holding a saturated counter count toward ``G`` only.
    """
    arr = st.array if isinstance(st, SketchState) else st
    tau = arr.tau
    cap = tau + 1
    G = 0
    b = [0] * tau
    for bucket in arr.buckets:
        if not bucket:
            continue
        G += 1
        total = 0
        for c in bucket.values():
            if c == cap:
                total = -1
                break
            total += c
        if 1 <= total <= tau:
            b[total - 1] += 1
    return G, b
