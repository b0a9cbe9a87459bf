"""Command-line entry point wiring all modules together.

Subcommands: norm, decode, coset, euclid, nil, scan, sweep, bench, selftest.
All randomness flows through one counter-based generator (Philox) keyed by
--seed, and the seed is recorded in every report, so reports are
byte-identical across runs and thread counts.  Reports are JSON, sweeps and
benches are CSV, stdout carries a human-readable summary only.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field

from . import acceptance, coset, decoder, engine, euclid, nil
from .config import PROFILES
from .domains import (
    EuclideanGrid,
    FiniteAbelian,
    Interval,
    signal_from_json,
    signal_to_json,
)
from .errors import GowersLabError
from .generators import generate
from .domains import Signal  # noqa: F401  (re-exported for script users)


@dataclass
class RunConfig:
    subcommand: str
    seed: int = 0
    threads: int = 1
    tolerance_profile: str = "default"
    out: str = ""
    extra: dict = field(default_factory=dict)


def parse_domain(text: str):
    """Parse 'z/12', 'z/4x3', 'interval:256', or 'grid:dim=1,extent=8,points=2048'."""
    text = text.strip().lower()
    if text.startswith("z/"):
        moduli = tuple(int(p) for p in text[2:].split("x"))
        return FiniteAbelian(moduli)
    if text.startswith("interval:"):
        return Interval(int(text.split(":", 1)[1]))
    if text.startswith("grid:"):
        params = dict(p.split("=") for p in text.split(":", 1)[1].split(","))
        return EuclideanGrid(int(params.get("dim", 1)), float(params.get("extent", 8.0)), int(params.get("points", 2048)))
    raise GowersLabError(f"cannot parse domain {text!r}")


# ---------------------------------------------------------------------------
# IO helpers


def _load_signal(path: str) -> Signal:
    with open(path) as fh:
        return signal_from_json(json.load(fh))


def _emit_json(payload: dict, out: str):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    return text


def _emit_csv(rows, fieldnames, out: str):
    if out:
        with open(out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                writer.writerow(row)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_norm(args, profile) -> int:
    if args.input:
        f = _load_signal(args.input)
    else:
        domain = parse_domain(args.domain)
        f = generate(args.generate, {"domain": domain, "degree": args.degree}, args.seed)
    res = engine.uk_norm(f, args.k, backend=args.backend, profile=profile)
    payload = {
        "k": res.k,
        "value": res.value,
        "backend": res.backend,
        "work": res.work_count,
        "elapsed_s": res.elapsed,
        "seed": args.seed,
    }
    print(f"U^{res.k} = {res.value:.12g}  [{res.backend}, work {res.work_count:.3g}]")
    _emit_json(payload, args.out)
    return 0


def _cmd_decode(args, profile) -> int:
    f = _load_signal(args.input)
    try:
        if args.domain_kind == "interval" or isinstance(f.domain, Interval):
            report = decoder.decode_interval(f, args.k, profile)
        else:
            report = decoder.decode_group(f, args.k, profile)
    except GowersLabError as exc:
        print(f"decode failed: {exc}")
        _emit_json({"failure": str(exc), "seed": args.seed}, args.report)
        return 1
    payload = report.to_json()
    payload["seed"] = args.seed
    print(f"residual_L1 = {report.residual_L1:.6g}, degree <= {report.phase.degree}")
    _emit_json(payload, args.report)
    return 0


def _cmd_coset(args, profile) -> int:
    f = _load_signal(args.input)
    try:
        report = coset.recover_structured(f, args.k, args.epsilon, profile)
    except GowersLabError as exc:
        print(f"coset recovery failed: {exc}")
        _emit_json({"failure": str(exc), "seed": args.seed}, args.report)
        return 1
    payload = report.to_json()
    payload["seed"] = args.seed
    print(
        f"subgroup order {len(report.coset.elements)}, offset {report.coset.offset}, "
        f"total residual {report.total_residual:.6g}"
    )
    _emit_json(payload, args.report)
    return 0


def _cmd_euclid(args, profile) -> int:
    payload = {"check": args.check, "seed": args.seed}
    if args.check == "constants":
        payload["constants"] = {str(k): euclid.sharp_gowers_constant(k) for k in range(1, 9)}
        payload["recursion_gaps"] = {str(k): euclid.ck_recursion_gap(k) for k in range(2, 9)}
    elif args.check == "det":
        payload["determinants"] = {str(d): euclid.cube_form_det(d) for d in range(1, args.d + 1)}
    elif args.check == "sharpness":
        rep = euclid.verify_sharpness(args.d, args.grid_points, args.extent, profile=profile)
        payload.update(
            {
                "ratio": rep.ratio,
                "constant": rep.constant,
                "error": rep.error,
                "refinement": list(rep.refinement),
                "observed_order": rep.observed_order,
            }
        )
    elif args.check == "fourier":
        grid = EuclideanGrid(1, args.extent, args.grid_points)
        f = euclid.gaussian_signal(grid, 1.0)
        u3, u3h, diff = euclid.fourier_invariance_check(f, profile)
        payload.update({"u3": u3, "u3_hat": u3h, "diff": diff})
    else:
        print(f"unknown check {args.check}", file=sys.stderr)
        return 2
    print(json.dumps(payload, indent=2, sort_keys=True))
    _emit_json(payload, args.out)
    return 0


def _cmd_nil(args, profile) -> int:
    if args.construct == "heisenberg":
        spec = nil.HeisenbergSpec(n_samples=args.n, sigma=args.sigma)
        f = nil.heisenberg_nilsequence(spec)
    elif args.construct == "quadext":
        f = nil.quadratic_example(args.n, args.q)
    elif args.construct == "skew":
        f = nil.skew_shift_orbit(args.alpha, args.x0, args.y0, args.n)
    else:
        print(f"unknown construction {args.construct}", file=sys.stderr)
        return 2
    payload = signal_to_json(f)
    payload["seed"] = args.seed
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh)
    print(f"built {args.construct} signal with {f.domain.cardinality} samples")
    return 0


def _cmd_scan(args, profile) -> int:
    f = _load_signal(args.input)
    result = nil.quad_correlation_scan(f, args.denominator, profile, threads=args.threads)
    payload = result.to_json()
    payload["seed"] = args.seed
    print(f"max |corr| = {result.max_abs:.6g} at (a, b) = {result.argmax}")
    _emit_json(payload, args.out)
    return 0


def _cmd_sweep(args, profile) -> int:
    with open(args.config) as fh:
        config = json.load(fh)
    rows = nil.threshold_sweep(config, seed=args.seed, profile=profile)
    fieldnames = ["construction", "params", "u3_ratio", "max_corr", "argmax_a", "argmax_b"]
    _emit_csv(rows, fieldnames, args.out)
    for row in rows:
        print(f"{row['construction']:>20} {row['params']:<40} ratio {row['u3_ratio']:.4f} corr {row['max_corr']:.4f}")
    return 0


def _cmd_bench(args, profile) -> int:
    sizes = [int(s) for s in args.sizes.split(",") if s]
    rows = engine.bench_backends(sizes, args.k, seed=args.seed, profile=profile)
    _emit_csv(rows, ["size", "backend", "k", "elapsed_s", "work"], args.out)
    for row in rows:
        print(f"size {row['size']:>6} {row['backend']:>10} k={row['k']} {row['elapsed_s']:.4f}s work {row['work']:.3g}")
    return 0


def _cmd_selftest(args, profile) -> int:
    results = acceptance.run_all(name_filter=args.filter, fast=args.fast)
    failures = [r for r in results if not r.passed]
    for r in results:
        print(acceptance.format_result(r))
    print(f"{len(results) - len(failures)}/{len(results)} criteria passed")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gowerslab", description="Gowers uniformity norm laboratory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--tolerance-profile", default="default", choices=sorted(PROFILES))
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("norm", help="compute a uniformity norm")
    p.add_argument("--input", default="")
    p.add_argument("--domain", default="z/16")
    p.add_argument("--generate", default="random-complex")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--backend", default="auto", choices=["auto", "direct", "recursive", "fft"])
    p.add_argument("--out", default="")

    p = sub.add_parser("decode", help="recover a polynomial phase")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--domain-kind", default="group", choices=["group", "interval"])
    p.add_argument("--report", default="")

    p = sub.add_parser("coset", help="structured coset + phase recovery")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--report", default="")

    p = sub.add_parser("euclid", help="sharp Euclidean constants and checks")
    p.add_argument("--check", required=True, choices=["constants", "det", "sharpness", "fourier"])
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--grid-points", type=int, default=2048)
    p.add_argument("--extent", type=float, default=8.0)
    p.add_argument("--out", default="")

    p = sub.add_parser("nil", help="build threshold-witness signals")
    p.add_argument("--construct", required=True, choices=["heisenberg", "quadext", "skew"])
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--q", type=int, default=3)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=nil.GOLDEN)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--out", default="")

    p = sub.add_parser("scan", help="quadratic correlation scan")
    p.add_argument("--input", required=True)
    p.add_argument("--denominator", type=int, required=True)
    p.add_argument("--out", default="")

    p = sub.add_parser("sweep", help="threshold sweep to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="sweep.csv")

    p = sub.add_parser("bench", help="time norm backends")
    p.add_argument("--sizes", default="8,16,32,64,128")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--out", default="")

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--filter", default="")
    p.add_argument("--fast", action="store_true", help="shrink the heavyweight criteria for a quick check")

    return parser


_HANDLERS = {
    "norm": _cmd_norm,
    "decode": _cmd_decode,
    "coset": _cmd_coset,
    "euclid": _cmd_euclid,
    "nil": _cmd_nil,
    "scan": _cmd_scan,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    profile = PROFILES[args.tolerance_profile]
    try:
        return _HANDLERS[args.subcommand](args, profile)
    except GowersLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
