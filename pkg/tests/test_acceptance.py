"""Exit criteria. Each test records one ``#n ... PASS/FAIL`` line, printed in
the "acceptance criteria" section of the pytest summary.

Run on its own with ``pytest tests/test_acceptance.py``.
"""

import json
import math
import subprocess
import sys
import textwrap
import time
import warnings
from importlib import resources

import jsonschema
import numpy as np
import pytest
from scipy import stats

from profilesketch.cli import main as cli_main
from profilesketch.estimator import SaturationWarning
from profilesketch.harness import (
    StreamSpec,
    exact_profile,
    frequencies,
    generate_stream,
    run_trials,
)
from profilesketch.invert import InvertInput, collision_mass_for, estimate_sample_size, invert_counts, rhat_bruteforce
from profilesketch.sketch import SketchConfig, SketchState, bucket_stats
from profilesketch.symfuncs import (
    StreamAggregates,
    capped_statistic,
    huber_objective,
    huber_weight,
    tukey_objective,
    tukey_weight,
)

EPS = 0.2
D_BENCH = 50_000
# frequencies 1..6, equal shares of the 50,000 distinct elements
PROFILE_BENCH = {i: D_BENCH // 6 + (1 if i <= D_BENCH % 6 else 0) for i in range(1, 7)}
ZIPF_BENCH = StreamSpec("zipf", alpha=1.2, support=100_000, m=1_000_000)
N_SEEDS = 50
RATE = 0.70


def random_F(rng, size, B):
    w = rng.random(size)
    return list(w / w.sum() * (B / 8) * rng.random())


def test_01_dp_matches_partition_oracle(verdict):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for B in (64, 1024):
        for _ in range(100):
            F = random_F(rng, 20, B)
            r = collision_mass_for(F, B)
            for i in range(2, 21):
                o = rhat_bruteforce(F, B, i)
                worst = max(worst, abs(r[i] - o) / o)
    elapsed = time.perf_counter() - start
    verdict(1, "DP vs partition oracle", worst <= 1e-9 and elapsed < 10,
            f"max rel err {worst:.2e} (<= 1e-9), {elapsed:.1f}s (< 10s)")


def test_02_noiseless_round_trip(verdict):
    rng = np.random.default_rng(2)
    B, tau = 10_000, 32
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        F = [f + 1e-3 for f in random_F(rng, tau, B)]
        S = sum(F)
        b = [math.exp(-S / B) * F[0]]
        b += [math.exp(-S / B) * (F[i - 1] + rhat_bruteforce(F, B, i)) for i in range(2, tau + 1)]
        F_hat = invert_counts(InvertInput(B, S, b)).F_hat
        worst = max(worst, max(abs(a - e) / e for a, e in zip(F_hat, F)))
    elapsed = time.perf_counter() - start
    verdict(2, "noiseless inversion round trip", worst <= 1e-6 and elapsed < 5,
            f"max rel err {worst:.2e} (<= 1e-6), {elapsed:.1f}s (< 5s)")


def test_03_sample_size_concentration(verdict):
    B, S = 4096, 512
    ok = 0
    xs = np.arange(1, S + 1, dtype=np.uint64)
    for seed in range(200):
        st = SketchState(SketchConfig.for_epsilon(EPS, "D", tau=3, seed=seed, B=B, advance_levels=False))
        st.extend(xs)
        s_hat = estimate_sample_size(bucket_stats(st)[0], B).value
        ok += abs(s_hat - S) <= 5 * math.sqrt(S)
    verdict(3, "S_hat concentration", ok / 200 >= 0.95, f"{ok}/200 within 5 sqrt|S| (>= 95%)")


def test_04_poissonization(verdict):
    F1, B = 2000, 4096
    pooled = []
    xs = np.arange(1, F1 + 1, dtype=np.uint64)
    for seed in range(50):
        st = SketchState(SketchConfig.for_epsilon(EPS, "D", tau=8, seed=seed, B=B, advance_levels=False))
        st.extend(xs)
        pooled.extend(sum(b.values()) for b in st.array.buckets)
    counts = np.bincount(pooled)
    lam = F1 / B
    k = 4  # bins 0..3 plus a 4+ tail keep every expected count above 5
    obs = np.append(counts[:k], counts[k:].sum())
    pmf = stats.poisson.pmf(np.arange(k), lam)
    exp = np.append(pmf, 1 - pmf.sum()) * len(pooled)
    p = stats.chisquare(obs, exp).pvalue
    verdict(4, "Poissonized bucket counts", p > 0.001, f"chi-square p = {p:.3f} (> 0.001)")


@pytest.fixture(scope="module")
def head_campaign():
    spec = StreamSpec("profile", profile=PROFILE_BENCH)
    cfg = SketchConfig.for_epsilon(EPS, "D", tau=3, seed=2024)
    sym = []

    def record(rep, est, phi):
        sym.append((est, phi))

    start = time.perf_counter()
    reports, summary = run_trials(spec, cfg, N_SEEDS, on_trial=record)
    return reports, summary, sym, time.perf_counter() - start


def test_05_eps_D_guarantee(head_campaign, verdict):
    reports, summary, _, elapsed = head_campaign
    rate = summary["head_pass_rate"]
    verdict(5, "head L1 <= eps D", rate >= RATE and elapsed < 120,
            f"pass rate {rate:.2f} (>= {RATE}), median {summary['head_l1_quantiles']['0.5'] / D_BENCH:.3f} D, "
            f"{elapsed:.0f}s (< 120s)")


def test_06_eps_m_guarantee(verdict):
    cfg = SketchConfig.for_epsilon(EPS, "m", seed=2025)
    start = time.perf_counter()
    _, summary = run_trials(ZIPF_BENCH, cfg, N_SEEDS)
    elapsed = time.perf_counter() - start
    rate = summary["full_pass_rate"]
    verdict(6, "full L1 <= eps m", rate >= RATE and elapsed < 300,
            f"pass rate {rate:.2f} (>= {RATE}), median {summary['full_l1_quantiles']['0.5'] / ZIPF_BENCH.m:.4f} m, "
            f"{elapsed:.0f}s (< 300s)")


def test_07_sampled_baselines(verdict):
    cfg = SketchConfig.for_epsilon(EPS, "m", seed=2026)
    _, plain = run_trials(ZIPF_BENCH, cfg, N_SEEDS, algo="dm")
    _, comp = run_trials(ZIPF_BENCH, cfg, N_SEEDS, algo="dm-compressed")
    a, b = plain["full_pass_rate"], comp["full_pass_rate"]
    verdict(7, "sampled baseline full L1 <= eps m", a >= RATE and abs(a - b) <= 0.10,
            f"plain {a:.2f} (>= {RATE}), compressed {b:.2f} (within 0.10)")


def test_08_symmetric_functions(head_campaign, verdict):
    _, _, trials, _ = head_campaign
    tau = 3
    funcs = {
        "capped": (capped_statistic, lambda f: np.minimum(f, tau).sum(), tau),
        "huber": (huber_objective, lambda f: sum(huber_weight(int(v), tau) for v in f), tau**2 / 2),
        "tukey": (tukey_objective, lambda f: sum(tukey_weight(int(v), tau) for v in f), tau**2 / 6),
    }
    rates = {}
    for name, (fn, oracle, w_max) in funcs.items():
        hits = 0
        for est, phi in trials:
            freqs = np.repeat(np.fromiter(phi.keys(), int), np.fromiter(phi.values(), int))
            D = len(freqs)
            truth = oracle(freqs)
            approx = fn(StreamAggregates.from_estimate(est), tau)
            hits += abs(approx - truth) <= EPS * D * w_max
        rates[name] = hits / len(trials)
    ok = all(r >= RATE for r in rates.values())
    verdict(8, "symmetric functions within eps D w", ok,
            ", ".join(f"{k} {v:.2f}" for k, v in rates.items()) + f" (each >= {RATE})")


def test_09_oracle_identities(verdict):
    specs = [StreamSpec("profile", profile=PROFILE_BENCH, seed=s) for s in range(3)]
    specs += [StreamSpec("profile", profile={1: 7, 4: 3, 50: 2}, seed=s) for s in range(3)]
    specs += [StreamSpec("zipf", alpha=a, support=5000, m=40_000, seed=s) for a in (0.8, 1.2) for s in range(3)]
    specs += [StreamSpec("uniform", support=3000, m=20_000, seed=s) for s in range(3)]
    ok = True
    for spec in specs:
        xs = generate_stream(spec)
        phi = exact_profile(xs)
        ok &= sum(i * c for i, c in phi.items()) == len(xs) == spec.m
        ok &= sum(phi.values()) == len(frequencies(xs))
        if spec.kind == "profile":
            ok &= phi == spec.profile
    verdict(9, "oracle identities and round trip", ok, f"{len(specs)} generated streams")


def _schema(name):
    return json.loads(resources.files("profilesketch").joinpath(f"schemas/{name}.schema.json").read_text())


def test_10_cli_determinism_and_schemas(tmp_path, verdict):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "profile", "profile": {"1": 2000, "2": 1000, "5": 300}, "seed": 3}))

    def once(k):
        d = tmp_path / str(k)
        d.mkdir()
        stream = d / "s.txt"
        rc = [cli_main(["generate", "--kind", "zipf", "--alpha", "1.2", "--support", "5000",
                        "--m", "50000", "--seed", "7", "--out", str(stream)])]
        for algo in ("sketch", "dm", "dm-compressed"):
            rc.append(cli_main(["estimate", "--in", str(stream), "--epsilon", "0.2", "--error-type", "m",
                                "--seed", "5", "--algo", algo, "--json-out", str(d / f"{algo}.json")]))
        rc.append(cli_main(["exact", "--in", str(stream), "--json-out", str(d / "exact.json")]))
        rc.append(cli_main(["evaluate", "--spec-file", str(spec), "--trials", "3", "--epsilon", "0.3",
                            "--tau", "3", "--seed", "1", "--no-timing",
                            "--csv-out", str(d / "t.csv"), "--json-out", str(d / "summary.json")]))
        return rc, {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaturationWarning)
        rc1, out1 = once(1)
        rc2, out2 = once(2)
    identical = out1 == out2
    valid = True
    for algo in ("sketch", "dm", "dm-compressed"):
        jsonschema.validate(json.loads(out1[f"{algo}.json"]), _schema("estimate_report"))
    jsonschema.validate(json.loads(out1["exact.json"]), _schema("exact_profile"))
    jsonschema.validate(json.loads(out1["summary.json"]), _schema("campaign_summary"))
    ok = identical and valid and set(rc1 + rc2) == {0}
    verdict(10, "CLI determinism and schema validity", ok,
            f"{len(out1)} outputs byte-identical={identical}, schemas valid")


_RSS_PROBE = textwrap.dedent("""
    import sys
    from profilesketch.cli import main
    rc = main(sys.argv[1:])
    # ru_maxrss survives exec and would report the parent's peak; VmHWM does not
    with open("/proc/self/status") as fh:
        print(next(line.split()[1] for line in fh if line.startswith("VmHWM:")))
    sys.exit(rc)
""")


def _peak_rss_kb(path, out):
    proc = subprocess.run(
        [sys.executable, "-c", _RSS_PROBE, "estimate", "--in", str(path), "--epsilon", "0.1",
         "--error-type", "D", "--tau", "3", "--json-out", str(out)],
        capture_output=True, text=True, check=True,
    )
    return int(proc.stdout.strip().splitlines()[-1])


@pytest.mark.slow
def test_11_single_pass_memory(tmp_path, verdict):
    rss = {}
    for m in (10**5, 10**7):
        path = tmp_path / f"s{m}.txt"
        assert cli_main(["generate", "--kind", "uniform", "--support", str(10**9), "--m", str(m),
                         "--seed", "1", "--out", str(path)]) == 0
        rss[m] = _peak_rss_kb(path, tmp_path / f"r{m}.json")
        path.unlink()
    growth = rss[10**7] / rss[10**5] - 1
    verdict(11, "estimate memory independent of m", growth <= 0.10,
            f"peak RSS {rss[10**5] / 1024:.1f} MiB -> {rss[10**7] / 1024:.1f} MiB, growth {growth:+.1%} (<= 10%)")
