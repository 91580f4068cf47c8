"""Command-line front end: ``profilesketch {generate,estimate,exact,evaluate}``."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import sys
import warnings
from pathlib import Path
from typing import Iterator, TextIO

import numpy as np

from . import __version__
from .estimator import SampledProfile, SaturationWarning, finalize
from .harness import ALGOS, KINDS, StreamSpec, TrialReport, exact_profile, generate_stream, run_trials
from .hashing import MASK64, hash_u64
from .sketch import ErrorType, SketchConfig, SketchState

STREAM_HEADER = "#profile-stream v1"
REPORT_VERSION = 1
CHUNK = 1 << 16

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def token_id(token: str) -> int:
    """Fold an arbitrary token into a u64 id through the keyed hash."""
    data = token.encode("utf-8")
    h = hash_u64(0, len(data))
    for k in range(0, len(data), 8):
        h = hash_u64(h, int.from_bytes(data[k : k + 8], "little"))
    return h


def read_ids(fh: TextIO, hash_tokens: bool = False) -> Iterator[int]:
    for lineno, line in enumerate(fh, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        if hash_tokens:
            yield token_id(s)
            continue
        try:
            v = int(s, 10)
        except ValueError:
            raise DataError(f"line {lineno}: not a decimal integer: {s[:40]!r}") from None
        if not 0 <= v <= MASK64:
            raise DataError(f"line {lineno}: id {v} outside the u64 range")
        yield v


def read_chunks(fh: TextIO, hash_tokens: bool = False, size: int = CHUNK) -> Iterator[np.ndarray]:
    it = read_ids(fh, hash_tokens)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=np.uint64)


def _open_in(path: str) -> TextIO:
    if path == "-":
        return sys.stdin
    return open(path, encoding="utf-8")


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _positive_eps(s: str) -> float:
    v = float(s)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError("epsilon must lie in (0, 1)")
    return v


def _error_type(s: str) -> ErrorType:
    try:
        return ErrorType.parse(s)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


# -- commands -----------------------------------------------------------

def cmd_generate(args) -> int:
    if args.kind == "profile":
        if args.spec is None:
            raise argparse.ArgumentTypeError("--kind profile needs --spec")
        try:
            prof = json.loads(args.spec)
        except json.JSONDecodeError as e:
            raise argparse.ArgumentTypeError(f"--spec is not valid JSON: {e}") from None
        spec = StreamSpec("profile", seed=args.seed, profile=prof, shuffle=not args.no_shuffle)
    else:
        if args.m is None or args.support is None:
            raise argparse.ArgumentTypeError(f"--kind {args.kind} needs --m and --support")
        spec = StreamSpec(args.kind, m=args.m, seed=args.seed, alpha=args.alpha, support=args.support)
    stream = generate_stream(spec)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8")
    try:
        out.write(STREAM_HEADER + "\n")
        for block in np.array_split(stream, max(1, len(stream) // CHUNK)):
            if len(block):
                out.write("\n".join(map(str, block.tolist())) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def estimate_report(args) -> dict:
    et = args.error_type
    with _open_in(args.input) as fh:
        chunks = read_chunks(fh, args.hash_tokens)
        if args.algo == "sketch":
            cfg = SketchConfig.for_epsilon(args.epsilon, et, args.tau, args.seed, B=args.B)
            st = SketchState(cfg)
            for block in chunks:
                st.extend(block)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SaturationWarning)
                est = finalize(st)
        else:
            sp = SampledProfile(args.epsilon, args.seed, compressed=args.algo == "dm-compressed")
            for block in chunks:
                sp.extend(block)
            est = sp.estimate()
    return {
        "version": REPORT_VERSION,
        "algo": args.algo,
        "error_type": est.error_type.value,
        "epsilon": args.epsilon,
        "seed": args.seed,
        "tau": est.tau,
        "profile": {str(i): v for i, v in sorted(est.phi_hat.items())},
        "D_hat": est.D_hat,
        "S_hat": est.S_hat,
        "m": est.m,
        "warnings": list(est.warnings),
    }


def cmd_estimate(args) -> int:
    _write_text(args.json_out, dump_json(estimate_report(args)))
    return EXIT_OK


def cmd_exact(args) -> int:
    with _open_in(args.input) as fh:
        ids = [v for v in read_ids(fh, args.hash_tokens)]
    prof = exact_profile(np.array(ids, dtype=np.uint64))
    report = {
        "version": REPORT_VERSION,
        "m": len(ids),
        "D": sum(prof.values()),
        "profile": {str(i): c for i, c in sorted(prof.items())},
    }
    _write_text(args.json_out, dump_json(report))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    try:
        raw = json.loads(Path(args.spec_file).read_text(encoding="utf-8"))
        spec = StreamSpec.from_dict(raw)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as e:
        raise DataError(f"bad spec file {args.spec_file}: {e}") from None
    if args.trials < 1:
        raise argparse.ArgumentTypeError("--trials must be at least 1")
    cfg = SketchConfig.for_epsilon(args.epsilon, args.error_type, args.tau, args.seed, B=args.B)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SaturationWarning)
        reports, summary = run_trials(spec, cfg, args.trials, args.algo)
    if args.no_timing:
        for r in reports:
            r.wall_ms = 0.0
        summary["mean_wall_ms"] = 0.0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TrialReport.CSV_COLUMNS)
    for r in reports:
        w.writerow(r.row())
    if args.csv_out:
        _write_text(args.csv_out, buf.getvalue())
    doc = {
        "version": REPORT_VERSION,
        "algo": args.algo,
        "epsilon": args.epsilon,
        "error_type": cfg.error_type.value,
        "tau": cfg.tau,
        "B": cfg.B,
        "seed": args.seed,
        "spec": raw,
        "summary": summary,
    }
    _write_text(args.json_out, dump_json(doc))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="profilesketch", description="Small-space stream profile estimation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic stream file")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--m", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--spec", help='profile JSON, e.g. \'{"3": 2}\'')
    g.add_argument("--alpha", type=float, default=1.2)
    g.add_argument("--support", type=int)
    g.add_argument("--no-shuffle", action="store_true")
    g.set_defaults(func=cmd_generate)

    def estimator_flags(q):
        q.add_argument("--epsilon", type=_positive_eps, default=0.1)
        q.add_argument("--error-type", type=_error_type, default=ErrorType.D)
        q.add_argument("--tau", type=int)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--algo", choices=ALGOS, default="sketch")
        q.add_argument("--B", type=int, help="override the bucket count")

    e = sub.add_parser("estimate", help="estimate the profile of a stream file")
    e.add_argument("--in", dest="input", required=True)
    estimator_flags(e)
    e.add_argument("--json-out")
    e.add_argument("--hash-tokens", action="store_true")
    e.set_defaults(func=cmd_estimate)

    x = sub.add_parser("exact", help="exact profile of a stream file")
    x.add_argument("--in", dest="input", required=True)
    x.add_argument("--json-out")
    x.add_argument("--hash-tokens", action="store_true")
    x.set_defaults(func=cmd_exact)

    v = sub.add_parser("evaluate", help="run a seeded evaluation campaign")
    v.add_argument("--spec-file", required=True)
    v.add_argument("--trials", type=int, default=50)
    estimator_flags(v)
    v.add_argument("--csv-out")
    v.add_argument("--json-out")
    v.add_argument("--no-timing", action="store_true", help="zero wall-clock fields")
    v.set_defaults(func=cmd_evaluate)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as e:
        print(f"profilesketch: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, UnicodeDecodeError) as e:
        print(f"profilesketch: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"profilesketch: invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as e:
        print(f"profilesketch: internal invariant violated: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
