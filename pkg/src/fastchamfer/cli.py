"""Command-line front end: estimate, exact, bench, selftest and generate."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
import warnings

from . import selftest
from .core import RegimeWarning, UsageError, exact_chamfer, next_pow2
from .estimator import DEFAULT_FAST_SCALE, amplified_estimate
from .formats import load_pointset, write_pointset
from .synth import clustered_pair, uniform_pair

EXACT_CAP = 4096
STAGES = ("quadtree", "sample", "tournament", "reject", "exact")


class RunConfig(argparse.Namespace):
    """Parsed options; ``validate`` enforces the cross-field rules."""

    def validate(self) -> RunConfig:
        eps = getattr(self, "epsilon", None)
        if eps is not None and not 0.0 < eps < 1.0:
            raise UsageError(f"--epsilon must lie in (0, 1), got {eps}")
        repeats = getattr(self, "repeats", None)
        if repeats is not None and (repeats < 1 or repeats % 2 == 0):
            raise UsageError(f"--repeats must be a positive odd integer, got {repeats}")
        if getattr(self, "profile", None) == "paper":
            self.scale = 1.0
        if getattr(self, "scale", 1.0) <= 0:
            raise UsageError("--scale must be positive")
        return self

    def estimator_kwargs(self) -> dict:
        return dict(profile=self.profile, scale=self.scale, strict_regime=self.strict_regime)


def _emit(rows: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        payload = rows[0] if len(rows) == 1 else rows
        out.write(json.dumps(payload, sort_keys=False) + "\n")
        return
    buf = io.StringIO()
    flat = [{k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()} for r in rows]
    writer = csv.DictWriter(buf, fieldnames=list(flat[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)
    out.write(buf.getvalue())


def cmd_estimate(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    A = load_pointset(cfg.a)
    B = load_pointset(cfg.b)
    rep = amplified_estimate(A, B, cfg.epsilon, repeats=cfg.repeats, rng=cfg.seed, **cfg.estimator_kwargs())
    _emit([rep.to_dict(timings=cfg.timings)], cfg.format, out)
    return 1 if rep.failed else 0


def cmd_exact(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    out.write(f"{exact_chamfer(load_pointset(cfg.a), load_pointset(cfg.b))}\n")
    return 0


def cmd_bench(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    if list(cfg.sizes) != sorted(cfg.sizes):
        raise UsageError("--sizes must be ascending")
    rows = []
    for n in cfg.sizes:
        A, B = uniform_pair(n, n, cfg.d, cfg.alpha, cfg.seed + n)
        tick = time.perf_counter()
        rep = amplified_estimate(A, B, cfg.epsilon, repeats=1, rng=cfg.seed, **cfg.estimator_kwargs())
        total = time.perf_counter() - tick
        run = rep.runs[-1]
        row = {"n": n, "d": cfg.d, "epsilon": cfg.epsilon, "profile": cfg.profile}
        row.update({f"{s}_ms": round(run.timings.get(s, 0.0) * 1e3, 3) for s in STAGES})
        row["total_ms"] = round(total * 1e3, 3)
        row["estimate"] = rep.estimate
        row["exact"] = exact_chamfer(A, B) if n <= EXACT_CAP else ""
        rows.append(row)
    _emit(rows, cfg.format, out)
    return 0


def cmd_selftest(cfg: RunConfig, out=None) -> int:
    out = out or sys.stdout
    names = cfg.suite or list(selftest.SUITES)
    unknown = [n for n in names if n not in selftest.SUITES]
    if unknown:
        raise UsageError(f"unknown suite(s) {unknown}; choose from {list(selftest.SUITES)}")
    results = selftest.run_suites(names, seed=cfg.seed)
    for r in results:
        out.write(r.line() + "\n")
    return 0 if all(r.passed for r in results) else 1


def cmd_generate(cfg: RunConfig, out=None) -> int:
    alpha = next_pow2(cfg.alpha)
    if cfg.mode == "clustered":
        A, B, _ = clustered_pair(cfg.n, cfg.d, alpha, cfg.seed)
    else:
        A, B = uniform_pair(cfg.n, cfg.n, cfg.d, alpha, cfg.seed)
    write_pointset(A, cfg.out_a, cfg.file_format)
    write_pointset(B, cfg.out_b, cfg.file_format)
    return 0


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.25, help="target relative error in (0, 1)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--profile", choices=("paper", "fast"), default="paper")
    p.add_argument("--scale", type=float, default=DEFAULT_FAST_SCALE,
                   help="constant multiplier for the fast profile (ignored by paper)")
    p.add_argument("--strict-regime", action="store_true",
                   help="reject epsilon below log^2 n / sqrt n instead of warning")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--timings", action="store_true", help="include per-stage elapsed_ms (breaks byte-identical output)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fastchamfer", description="Approximate l1 Chamfer distance.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="(1 +- eps)-estimate of CH(A, B)")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--repeats", type=int, default=1, help="odd number of runs; the median is reported")
    _add_run_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("exact", help="exact CH(A, B)")
    p.add_argument("a")
    p.add_argument("b")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("bench", help="time the estimator on seeded uniform instances")
    p.add_argument("--sizes", type=int, nargs="+", default=[1 << e for e in range(12, 18)])
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--alpha", type=int, default=1 << 16)
    _add_run_options(p)
    p.set_defaults(func=cmd_bench, profile="fast", format="csv")

    p = sub.add_parser("selftest", help="run the pinned-seed self-check suites")
    p.add_argument("--suite", action="append", choices=list(selftest.SUITES),
                   help="run only this suite (repeatable)")
    p.add_argument("--seed", type=int, default=selftest.SEED)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("generate", help="write a seeded synthetic pair of point sets")
    p.add_argument("out_a")
    p.add_argument("out_b")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--alpha", type=int, default=1 << 16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("uniform", "clustered"), default="uniform")
    p.add_argument("--file-format", choices=("text", "binary"), default="text")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    cfg = build_parser().parse_args(argv, namespace=RunConfig())
    try:
        cfg.validate()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RegimeWarning)
            status = cfg.func(cfg)
        for msg in dict.fromkeys(str(w.message) for w in caught if w.category is RegimeWarning):
            print(f"fastchamfer: warning: {msg}", file=sys.stderr)
        return status
    except (UsageError, OSError) as exc:
        print(f"fastchamfer: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
