"""Synthetic streams, the exact-profile oracle, and a seeded trial runner."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from .estimator import EstimatedProfile, SampledProfile, finalize
from .hashing import derive_seed
from .sketch import SketchConfig, SketchState

KINDS = ("profile", "zipf", "uniform")
ALGOS = ("sketch", "dm", "dm-compressed")


@dataclass
class StreamSpec:
    kind: str
    m: int = 0
    seed: int = 0
    profile: dict[int, int] = field(default_factory=dict)
    alpha: float = 1.2
    support: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown stream kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "profile":
            prof = {int(i): int(c) for i, c in self.profile.items()}
            if any(i < 1 or c < 0 for i, c in prof.items()):
                raise ValueError("profile frequencies must be >= 1 and counts >= 0")
            mass = sum(i * c for i, c in prof.items())
            if self.m and self.m != mass:
                raise ValueError(f"profile mass {mass} disagrees with m={self.m}")
            self.profile = {i: c for i, c in sorted(prof.items()) if c}
            self.m = mass
        else:
            if self.m < 0:
                raise ValueError("m must be nonnegative")
            if self.support < 1:
                raise ValueError("support must be positive")
            if self.kind == "zipf" and not self.alpha > 0:
                raise ValueError("zipf exponent must be positive")

    @classmethod
    def from_dict(cls, d: Mapping) -> "StreamSpec":
        d = dict(d)
        if "profile" in d:
            d["profile"] = {int(k): int(v) for k, v in d["profile"].items()}
        return cls(**d)

    def with_seed(self, seed: int) -> "StreamSpec":
        d = asdict(self)
        d["seed"] = seed
        return StreamSpec(**d)


def generate_stream(spec: StreamSpec) -> np.ndarray:
    """Deterministic ``uint64`` element ids for a spec."""
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "profile":
        freqs = np.repeat(
            np.fromiter(spec.profile.keys(), dtype=np.int64),
            np.fromiter(spec.profile.values(), dtype=np.int64),
        )
        ids = np.arange(1, freqs.size + 1, dtype=np.uint64)
        out = np.repeat(ids, freqs)
    elif spec.kind == "zipf":
        weights = np.arange(1, spec.support + 1, dtype=np.float64) ** -spec.alpha
        cdf = np.cumsum(weights)
        cdf /= cdf[-1]
        idx = np.searchsorted(cdf, rng.random(spec.m), side="right")
        out = np.minimum(idx, spec.support - 1).astype(np.uint64) + np.uint64(1)
    else:
        out = rng.integers(1, spec.support + 1, size=spec.m, dtype=np.uint64)
    if spec.shuffle and spec.kind == "profile":
        out = rng.permutation(out)
    return out


def frequencies(stream) -> np.ndarray:
    _, counts = np.unique(np.asarray(stream, dtype=np.uint64), return_counts=True)
    return counts


def exact_profile(stream) -> dict[int, int]:
    """Frequency-of-frequencies map ``{i: #elements appearing exactly i times}``."""
    if len(stream) == 0:
        return {}
    fs, cs = np.unique(frequencies(stream), return_counts=True)
    return {int(f): int(c) for f, c in zip(fs, cs)}


def head_l1(phi: Mapping[int, float], phi_hat: Mapping[int, float], tau: int) -> float:
    return sum(abs(phi.get(i, 0) - phi_hat.get(i, 0.0)) for i in range(1, tau + 1))


def full_l1(phi: Mapping[int, float], phi_hat: Mapping[int, float]) -> float:
    keys = set(phi) | set(phi_hat)
    return sum(abs(phi.get(i, 0) - phi_hat.get(i, 0.0)) for i in keys)


@dataclass
class TrialReport:
    seed: int
    head_l1: float
    full_l1: float
    D: int
    m: int
    D_hat: float
    S_hat: float
    head_pass: bool
    full_pass: bool
    wall_ms: float

    CSV_COLUMNS = ("seed", "head_l1", "full_l1", "D", "m", "D_hat", "S_hat",
                   "head_pass", "full_pass", "wall_ms")

    def row(self) -> list:
        return [getattr(self, c) for c in self.CSV_COLUMNS]


def run_estimator(algo: str, stream: np.ndarray, cfg: SketchConfig) -> EstimatedProfile:
    if algo == "sketch":
        st = SketchState(cfg)
        st.extend(stream)
        return finalize(st)
    if algo in ("dm", "dm-compressed"):
        sp = SampledProfile(cfg.epsilon, cfg.seed, m=len(stream), compressed=algo == "dm-compressed")
        sp.extend(stream)
        return sp.estimate()
    raise ValueError(f"unknown algorithm {algo!r}; expected one of {ALGOS}")


def run_trial(spec: StreamSpec, cfg: SketchConfig, algo: str = "sketch") -> tuple[TrialReport, EstimatedProfile, dict[int, int]]:
    stream = generate_stream(spec)
    phi = exact_profile(stream)
    start = time.perf_counter()
    est = run_estimator(algo, stream, cfg)
    wall = (time.perf_counter() - start) * 1e3
    D = sum(phi.values())
    m = len(stream)
    h = head_l1(phi, est.phi_hat, est.tau)
    f = full_l1(phi, est.phi_hat)
    eps = cfg.epsilon
    rep = TrialReport(cfg.seed, h, f, D, m, est.D_hat, est.S_hat,
                      h <= eps * D, f <= eps * m, wall)
    return rep, est, phi


def trial_seeds(base_seed: int, n_trials: int) -> list[int]:
    return [derive_seed(base_seed, 1000 + i) & ((1 << 63) - 1) for i in range(n_trials)]


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n) if n else 0.0


def summarize(reports: list[TrialReport]) -> dict:
    n = len(reports)
    hp = sum(r.head_pass for r in reports) / n
    fp = sum(r.full_pass for r in reports) / n
    heads = np.array([r.head_l1 for r in reports])
    fulls = np.array([r.full_l1 for r in reports])
    qs = (0.1, 0.5, 0.9)
    return {
        "n_trials": n,
        "head_pass_rate": hp,
        "head_pass_se": _binomial_se(hp, n),
        "full_pass_rate": fp,
        "full_pass_se": _binomial_se(fp, n),
        "head_l1_quantiles": {str(q): float(np.quantile(heads, q)) for q in qs},
        "full_l1_quantiles": {str(q): float(np.quantile(fulls, q)) for q in qs},
        "mean_wall_ms": float(np.mean([r.wall_ms for r in reports])),
    }


def run_trials(
    spec: StreamSpec,
    cfg: SketchConfig,
    n_trials: int,
    algo: str = "sketch",
    *,
    on_trial: Callable[[TrialReport, EstimatedProfile, dict], None] | None = None,
) -> tuple[list[TrialReport], dict]:
    """Independent trials; trial ``k`` reseeds both the stream and the estimator."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    reports = []
    for s in trial_seeds(cfg.seed ^ spec.seed, n_trials):
        rep, est, phi = run_trial(spec.with_seed(s), cfg.with_seed(s), algo)
        reports.append(rep)
        if on_trial is not None:
            on_trial(rep, est, phi)
    return reports, summarize(reports)
