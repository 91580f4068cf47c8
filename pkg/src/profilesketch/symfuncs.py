"""Symmetric functions of the frequency vector, evaluated from a profile.

Head terms (frequencies up to ``tau``) are read off the profile; tail terms
are recovered from the distinct count ``D`` and stream length ``m``, so an
estimated profile plus ``D_hat`` and exact ``m`` is enough.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .estimator import EstimatedProfile


@dataclass(frozen=True)
class StreamAggregates:
    profile: Mapping[int, float]
    D: float
    m: int
    tau_max: int | None = None

    def __post_init__(self) -> None:
        if self.D < 0 or self.m < 0:
            raise ValueError("D and m must be nonnegative")

    @classmethod
    def exact(cls, profile: Mapping[int, int]) -> "StreamAggregates":
        return cls(dict(profile), float(sum(profile.values())),
                   sum(i * c for i, c in profile.items()))

    @classmethod
    def from_estimate(cls, est: EstimatedProfile, m: int | None = None) -> "StreamAggregates":
        return cls(dict(est.phi_hat), est.D_hat, est.m if m is None else m, est.tau)

    def head(self, tau: int) -> list[tuple[int, float]]:
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        if self.tau_max is not None and tau > self.tau_max:
            raise ValueError(f"tau={tau} exceeds the profile's range {self.tau_max}")
        return [(i, self.profile.get(i, 0.0)) for i in range(1, tau + 1)]


def count_freq_at_most(agg: StreamAggregates, tau: int) -> float:
    return sum(c for _, c in agg.head(tau))


def count_freq_at_least(agg: StreamAggregates, tau: int) -> float:
    if tau <= 0:
        return agg.D
    return agg.D - count_freq_at_most(agg, tau - 1)


def mass_at_most(agg: StreamAggregates, tau: int) -> float:
    return sum(i * c for i, c in agg.head(tau))


def mass_at_least(agg: StreamAggregates, tau: int) -> float:
    """``m - sum_{i<=tau} i phi_i``: the mass of elements more frequent than ``tau``."""
    return agg.m - mass_at_most(agg, tau)


def capped_statistic(agg: StreamAggregates, tau: int, unit_tail: bool = False) -> float:
    """``sum_x min(f_x, tau)``.

    ``unit_tail=True`` weights elements above ``tau`` by 1 instead of ``tau``
    (``sum_{i<=tau} i phi_i + sum_{i>tau} phi_i``).
    """
    tail = agg.D - count_freq_at_most(agg, tau)
    return mass_at_most(agg, tau) + (1 if unit_tail else tau) * tail


def tukey_objective(agg: StreamAggregates, tau: int) -> float:
    if tau < 1:
        raise ValueError("tau must be at least 1")
    w_tail = tau * tau / 6.0
    head = sum(c * w_tail * (1.0 - (1.0 - i * i / (tau * tau)) ** 3) for i, c in agg.head(tau))
    return head + (agg.D - count_freq_at_most(agg, tau)) * w_tail


def huber_objective(agg: StreamAggregates, tau: int, classical: bool = False) -> float:
    """Head ``sum phi_i i^2/2`` plus tail ``sum phi_i (tau i - 1/2)``.

    ``classical=True`` uses the textbook tail ``tau i - tau^2/2`` instead.
    """
    if tau < 1:
        raise ValueError("tau must be at least 1")
    head = sum(c * i * i / 2.0 for i, c in agg.head(tau))
    tail_count = agg.D - count_freq_at_most(agg, tau)
    offset = tau * tau / 2.0 if classical else 0.5
    return head + tau * mass_at_least(agg, tau) - offset * tail_count


def huber_weight(i: int, tau: int, classical: bool = False) -> float:
    if i <= tau:
        return i * i / 2.0
    return tau * i - (tau * tau / 2.0 if classical else 0.5)


def tukey_weight(i: int, tau: int) -> float:
    if i <= tau:
        return tau * tau / 6.0 * (1.0 - (1.0 - i * i / (tau * tau)) ** 3)
    return tau * tau / 6.0
