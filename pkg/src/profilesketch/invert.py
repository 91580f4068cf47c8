"""Recover the sampled elements' profile from collision-corrupted bucket counts.

Buckets receive Poisson-thinned copies of sampled elements, so a bucket's
content is a multiset of element frequencies whose expected multiplicity is
``B * prod_j (F_j/B)^{y_j} e^{-F_j/B} / y_j!``. After scaling the observed
bucket histogram by ``e^{S/B}`` the exponential factor drops out and the
per-total expectations can be peeled off one frequency at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np


@dataclass
class SampleSizeEstimate:
    value: float
    saturated: bool = False


def estimate_sample_size(G: int, B: int) -> SampleSizeEstimate:
    """Occupancy estimate ``-B ln(1 - G/B)`` of the number of sampled elements.

    When every bucket is occupied the formula diverges; the estimate is clamped
    to ``B ln B`` and flagged.
    """
    if B < 1:
        raise ValueError("B must be positive")
    if not 0 <= G <= B:
        raise ValueError(f"occupied bucket count G={G} outside [0, {B}]")
    if G == B:
        return SampleSizeEstimate(B * math.log(B), saturated=True)
    return SampleSizeEstimate(-B * math.log1p(-G / B))


@dataclass
class InvertInput:
    B: int
    S_hat: float
    b: Sequence[float]

    def __post_init__(self) -> None:
        if self.B < 1:
            raise ValueError("B must be positive")
        if not math.isfinite(self.S_hat) or self.S_hat < 0:
            raise ValueError("S_hat must be finite and nonnegative")
        if any(v < 0 for v in self.b):
            raise ValueError("bucket counts must be nonnegative")


@dataclass
class InvertResult:
    F_hat: list[float]
    table: np.ndarray = field(repr=False)

    def collision_mass(self, i: int) -> float:
        """Estimated count of buckets with total ``i`` holding several elements."""
        return float(self.table[i, 1 : i // 2 + 1].sum())


def _collision_row(dp: np.ndarray, suffix: np.ndarray, i: int, B: float) -> None:
    """Fill ``dp[i, x]`` for ``x <= i // 2`` (multi-element buckets, min part x)."""
    for x in range(1, i // 2 + 1):
        fx = dp[x, x]
        if fx == 0.0:
            continue
        ratio = fx / B
        acc = 0.0
        term = 1.0  # (F_x/B)^k / k!
        kmax = i // x
        for k in range(1, kmax):
            term *= ratio / k
            rest = i - k * x
            if rest > x:
                # sum over x' in (x, rest] of dp[rest, x']
                acc += suffix[rest, x + 1] * term
        if i % x == 0:
            q = i // x
            acc += B * (term * ratio / q)  # B (F_x/B)^q / q!
        dp[i, x] = acc
    # suffix[i, x] = sum_{x' >= x} dp[i, x'] (diagonal added by caller)


def _fill_suffix(dp: np.ndarray, suffix: np.ndarray, i: int) -> None:
    running = 0.0
    for x in range(i, 0, -1):
        running += dp[i, x]
        suffix[i, x] = running


def invert_counts(inp: InvertInput) -> InvertResult:
    """Run the collision-inversion dynamic program.

    ``table[j, x]`` is the expected (e^{S/B}-scaled) number of buckets with
    total ``j`` whose smallest member frequency is ``x``; the diagonal holds the
    single-element buckets, i.e. the frequency estimates themselves. Row ``i``
    off-diagonal entries depend only on earlier diagonals, so they are filled
    before ``table[i, i]``.
    """
    tau = len(inp.b)
    B = float(inp.B)
    scale = math.exp(inp.S_hat / B)
    dp = np.zeros((tau + 1, tau + 1))
    suffix = np.zeros((tau + 2, tau + 2))
    for i in range(1, tau + 1):
        _collision_row(dp, suffix, i, B)
        bad = dp[i, 1 : i // 2 + 1].sum()
        dp[i, i] = max(inp.b[i - 1] * scale - bad, 0.0)
        _fill_suffix(dp, suffix, i)
    return InvertResult([float(dp[i, i]) for i in range(1, tau + 1)], dp)


def collision_mass_for(F: Sequence[float], B: int) -> list[float]:
    """Forward model: expected collision mass r_i for every i given exact F.

    Pins the table diagonal to ``F`` rather than deriving it from counts.
    """
    tau = len(F)
    Bf = float(B)
    dp = np.zeros((tau + 1, tau + 1))
    suffix = np.zeros((tau + 2, tau + 2))
    out = [0.0, 0.0]
    for i in range(1, tau + 1):
        _collision_row(dp, suffix, i, Bf)
        if i > 1:
            out.append(float(dp[i, 1 : i // 2 + 1].sum()))
        dp[i, i] = F[i - 1]
        _fill_suffix(dp, suffix, i)
    return out


def _partitions(n: int, max_part: int):
    """Partitions of n into parts <= max_part, parts non-increasing."""
    if n == 0:
        yield []
        return
    for p in range(min(n, max_part), 0, -1):
        for rest in _partitions(n - p, p):
            yield [p, *rest]


@lru_cache(maxsize=64)
def _partition_table(i: int) -> tuple[np.ndarray, np.ndarray]:
    """Multiplicity rows ``y`` (``y[j-1]`` parts equal to j) for partitions of i
    into at least two parts, and ``prod_j y_j!`` per row."""
    rows = []
    for parts in _partitions(i, i - 1):
        y = np.zeros(i - 1, dtype=np.int64)
        for p in parts:
            y[p - 1] += 1
        rows.append(y)
    Y = np.array(rows, dtype=np.int64).reshape(len(rows), i - 1)
    fact = np.array([math.prod(math.factorial(v) for v in row) for row in Y.tolist()], dtype=float)
    return Y, fact


def rhat_bruteforce(F: Sequence[float], B: int, i: int) -> float:
    """Expected collision mass for total ``i`` by enumerating integer partitions.

    Sums ``B * prod_j (F_j/B)^{y_j} / y_j!`` over partitions of ``i`` into at
    least two parts. Exponential in ``i``; meant as a test oracle.
    """
    if i < 2:
        raise ValueError("collision mass is defined for i >= 2")
    if len(F) < i - 1:
        raise ValueError(f"need at least {i - 1} frequency entries")
    Y, fact = _partition_table(i)
    ratio = np.asarray(F[: i - 1], dtype=float) / B
    terms = np.prod(ratio[None, :] ** Y, axis=1) / fact
    return float(B * terms.sum())
