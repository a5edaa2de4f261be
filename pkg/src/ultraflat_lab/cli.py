"""``ultraflat-lab generate|flatten|analyze|verify``.

Exit codes: 0 success, 2 usage error, 3 flattener did not converge,
4 numerical precondition failure (polynomial vanishes on the grid).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import generators, phase, theorems
from .poly_core import atomic_write_text, evaluate_on_grid, load_polynomial, mean_square, save_polynomial
from .quadrature import Q_MAX
from .report import table_filename, table_svg

EXIT_OK, EXIT_USAGE, EXIT_NO_CONVERGENCE, EXIT_NUMERICAL = 0, 2, 3, 4
KINDS = ("quadratic", "rudin_shapiro", "random")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}")


def _build_start(args):
    kind = args.kind
    if kind == "rudin_shapiro":
        m = args.m
        if m is None:
            if args.n is None or args.n < 0 or (args.n + 1) & args.n:
                raise UsageError("rudin_shapiro needs --m, or --n with n+1 a power of two")
            m = (args.n + 1).bit_length() - 1
        if m < 0:
            raise UsageError(f"--m must be non-negative, got {m}")
        return generators.rudin_shapiro(m)
    if args.n is None:
        raise UsageError(f"{kind} needs --n")
    if args.n < 0:
        raise UsageError(f"--n must be non-negative, got {args.n}")
    if kind == "quadratic":
        return generators.quadratic_phase(args.n)
    return generators.random_unimodular(args.n, args.seed)


def _flattener_config(args) -> generators.FlattenerConfig:
    try:
        return generators.FlattenerConfig(
            target_eps=args.target_eps,
            max_iters=args.max_iters,
            oversample=args.oversample,
            seed=args.seed,
            damping=args.damping,
            method=args.method,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _load(path):
    try:
        return load_polynomial(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}")
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}")


def cmd_generate(args) -> int:
    P = _build_start(args)
    save_polynomial(P, args.out)
    report = phase.flatness_report(P)
    print(f"n = {P.degree}")
    print(f"certified eps = {report.eps:.17g}")
    print(f"mean_square = {mean_square(P):.17g}")
    return EXIT_OK


def cmd_flatten(args) -> int:
    cfg = _flattener_config(args)
    P0 = _load(args.input) if args.input else _build_start(args)
    P, trace = generators.flatten(P0, cfg)
    save_polynomial(P, args.out)
    trace_path = args.trace or Path(args.out).with_suffix(".trace.csv")
    atomic_write_text(trace_path, trace.to_csv())
    print(f"n = {P.degree}")
    print(f"iterations = {trace.iterations}")
    print(f"certified eps = {trace.final_eps:.17g}")
    print(f"converged = {trace.converged}")
    return EXIT_OK if trace.converged else EXIT_NO_CONVERGENCE


def cmd_analyze(args) -> int:
    P = _load(args.input)
    M = args.M
    if M is not None and M < 2 * (P.degree + 1):
        raise UsageError(f"--M must be at least 2(n+1) = {2 * (P.degree + 1)}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        profile = phase.phase_profile(P, M)
        distribution = phase.angular_speed_distribution(P, profile.M)
        identities = {
            "speed_identity_defect": phase.conjugate_speed_identity(P, profile.M),
            "sine_beta_defect": phase.sine_beta_identity(P, profile.M),
            "winding_number": phase.winding_number(evaluate_on_grid(P, profile.M), P.degree),
        }
    except phase.NearZeroModulus as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"t = {exc.t:.17g}")
        return EXIT_NUMERICAL
    flat = phase.flatness_report(P, max(profile.M, 2 * (P.degree + 1)))
    summary = {
        "profile": profile.summary(),
        "identities": identities,
        "flatness": flat.to_dict(),
        "distribution_sup_deviation": distribution.sup_deviation,
    }
    atomic_write_text(out / "phase.csv", profile.to_csv())
    atomic_write_text(out / "distribution.json", distribution.to_json() + "\n")
    atomic_write_text(out / "summary.json", json.dumps(summary, indent=1) + "\n")
    if args.format == "json":
        atomic_write_text(out / "phase.json", profile.to_json() + "\n")
    for key, value in identities.items():
        print(f"{key} = {value}")
    print(f"certified eps = {flat.eps:.17g}")
    return EXIT_OK


def _theorem_list(text: str) -> list[str]:
    ids = [t.strip() for t in text.split(",") if t.strip()]
    for tid in ids:
        if tid not in theorems.THEOREM_IDS and tid != "T27" or tid == "L37":
            raise UsageError(f"unknown or non-sweepable theorem id {tid!r}")
    return ids


def cmd_verify(args) -> int:
    ids = _theorem_list(args.theorems)
    qs = args.qs if args.qs else ([args.q] if args.q is not None else [2.0])
    for q in qs:
        if not (0 < q <= Q_MAX):
            raise UsageError(f"q must lie in (0, {Q_MAX:g}], got {q}")
    if args.input:
        polys = sorted((_load(p) for p in args.input), key=lambda P: P.degree)
        degrees = [P.degree for P in polys]
        if len(set(degrees)) != len(degrees):
            raise UsageError("input files must have distinct degrees")
        sequence = [(P.degree, P) for P in polys]
    elif args.ns:
        if any(b <= a for a, b in zip(args.ns, args.ns[1:])) or min(args.ns) < 1:
            raise UsageError("--ns must be positive and strictly increasing")
        cfg = _flattener_config(args)
        sweep = generators.flat_sweep(args.ns, cfg, kind="random" if args.kind == "random" else "quadratic")
        sequence = sweep
        if args.save_sweep:
            save_dir = Path(args.out) / "sweep"
            for n, P, trace in sweep:
                save_polynomial(P, save_dir / f"P_{n}.json")
                atomic_write_text(save_dir / f"P_{n}.trace.csv", trace.to_csv())
    else:
        raise UsageError("verify needs --in files or --ns")
    tables = theorems.sweep_verify(sequence, ids, qs)
    out = Path(args.out)
    if args.format == "json":
        atomic_write_text(out / "tables.json", theorems.tables_to_json(tables) + "\n")
    else:
        atomic_write_text(out / "tables.csv", theorems.tables_to_csv(tables))
    if args.svg:
        for table in tables:
            atomic_write_text(out / table_filename(table, "svg"), table_svg(table))
    for table in tables:
        last = table.rows[-1]
        q = "" if table.q is None else f" q={table.q:g}"
        print(f"{table.theorem_id}{q}: n={last.n} ratio={last.ratio:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ultraflat-lab",
        description="Unimodular polynomials, their conjugate reciprocals, and ultraflat sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def source(p, required_kind=False):
        p.add_argument("--kind", choices=KINDS, default=None if not required_kind else "quadratic")
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int, help="Rudin-Shapiro order (degree 2**m - 1)")
        p.add_argument("--seed", type=int, default=0)

    def flattener(p):
        p.add_argument("--target-eps", type=float, default=0.1)
        p.add_argument("--max-iters", type=int, default=5000)
        p.add_argument("--oversample", type=int, default=16)
        p.add_argument("--damping", type=float, default=0.7)
        p.add_argument("--method", choices=generators.METHODS, default="ap+polish")

    g = sub.add_parser("generate", help="write a starting polynomial")
    source(g, required_kind=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("flatten", help="flatten a polynomial")
    f.add_argument("--in", dest="input")
    source(f, required_kind=True)
    flattener(f)
    f.add_argument("--out", required=True)
    f.add_argument("--trace", help="trace CSV path (default: next to --out)")
    f.set_defaults(func=cmd_flatten)

    a = sub.add_parser("analyze", help="phase profile and identity defects")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--M", type=int)
    a.add_argument("--out", required=True, help="output directory")
    a.add_argument("--format", choices=("json", "csv"), default="csv")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="theorem verdicts and convergence tables")
    v.add_argument("--in", dest="input", nargs="+")
    v.add_argument("--ns", type=_int_list)
    source(v, required_kind=True)
    flattener(v)
    v.add_argument("--theorems", default="T22")
    v.add_argument("--q", type=float)
    v.add_argument("--qs", type=_float_list)
    v.add_argument("--out", required=True, help="output directory")
    v.add_argument("--format", choices=("json", "csv"), default="csv")
    v.add_argument("--svg", action="store_true", help="also write one SVG plot per table")
    v.add_argument("--save-sweep", action="store_true", help="keep flattened polynomials and traces")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
