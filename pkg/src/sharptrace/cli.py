"""Command line front end.

    sharptrace constants --n 3 --p 2 --a 4 --out c.json
    sharptrace verify {gn,dual,affine,centroid,transport} [flags]
    sharptrace search [flags]

Exit status: 0 when every case passes, 1 when any case fails, 2 on bad
arguments.  Reports are JSON (to --out, else stdout); one PASS/FAIL line per
case goes to standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

from .constants import DomainError, make_params
from .norms import NormError, NormSpec
from .quadrature import QuadratureScheme, default_scheme
from .report import Report
from .search import QUOTIENTS, SearchConfig
from . import suites

SUITES = ("gn", "dual", "affine", "centroid", "transport")


class UsageError(ValueError):
    pass


def parse_norm(text: str | None, n: int) -> NormSpec:
    """lq:Q, ellipsoid:FILE (JSON matrix or {"matrix": ...}) or split:Q; default Euclidean."""
    if text is None:
        return NormSpec.euclidean(n)
    kind, _, arg = text.partition(":")
    if not arg:
        raise UsageError(f"--norm needs KIND:VALUE, got {text!r}")
    try:
        if kind == "lq":
            return NormSpec.lq(float(arg), n)
        if kind == "split":
            return NormSpec.split_q(float(arg), n - 1)
        if kind == "ellipsoid":
            with open(arg) as fh:
                data = json.load(fh)
            M = data["matrix"] if isinstance(data, dict) else data
            spec = NormSpec.ellipsoid(M)
            if spec.dim != n:
                raise UsageError(f"ellipsoid matrix is {spec.dim}x{spec.dim}, need {n}x{n}")
            return spec
    except (OSError, json.JSONDecodeError, NormError, KeyError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad --norm {text!r}: {exc}") from exc
    raise UsageError(f"unknown norm kind {kind!r} (use lq, ellipsoid or split)")


def _scheme(args) -> QuadratureScheme:
    over = {}
    if args.level is not None:
        over["level"] = args.level
    if args.tol_rel is not None:
        over["tol_rel"] = args.tol_rel
    if args.max_level is not None:
        over["max_level"] = args.max_level
    try:
        return default_scheme(args.n, **over)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _common(p: argparse.ArgumentParser, verify: bool = True) -> None:
    g = p.add_argument_group("parameters")
    g.add_argument("--n", type=int, required=True, help="dimension, 2 to 4")
    g.add_argument("--p", type=float, required=True, help="gradient exponent, 1 < p < n")
    g.add_argument("--a", type=float, required=True, help="weight exponent, a >= n")
    g.add_argument("--out", metavar="FILE.json", help="write the report here (default: stdout)")
    if not verify:
        return
    g.add_argument("--norm", metavar="lq:Q|ellipsoid:FILE|split:Q", help="norm on R^n (default lq:2)")
    g.add_argument("--lam-mix", type=float, default=0.5, help="mixing weight of the affine energy (default 0.5)")
    g.add_argument("--grid-level", type=int, default=2, choices=(1, 2, 3),
                   help="transport grid level; 3 uses the full 2048-node budget (default 2)")
    g.add_argument("--tol", type=float, help="case tolerance (default: the suite's own)")
    g.add_argument("--seed", type=int, default=0, help="seed of the xorshift64* stream (default 0)")
    g.add_argument("--csv", metavar="FILE.csv", help="also write cases (or the search trace) as CSV")
    q = p.add_argument_group("quadrature")
    q.add_argument("--level", type=int, help="starting level of the tensor rule (default per n)")
    q.add_argument("--tol-rel", type=float, help="relative doubling tolerance (default per n)")
    q.add_argument("--max-level", type=int, help="highest level tried (default per n)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sharptrace", description="Numerical certification of sharp trace inequalities.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("constants", help="exponents and closed-form constants")
    _common(c, verify=False)
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", choices=SUITES)
    _common(v)
    v.add_argument("--pairs", type=int, default=50, help="random pairs for the dual suite (default 50)")
    v.add_argument("--samples", type=int, help="random functions for gn (default 5) or affine (default 2)")
    s = sub.add_parser("search", help="perturbation test at h_p and a family search")
    _common(s)
    s.add_argument("--quotient", choices=QUOTIENTS, default="gn", help="quotient to maximise (default gn)")
    s.add_argument("--directions", type=int, default=50, help="bump directions (default 50)")
    s.add_argument("--config", metavar="FILE.json", help="SearchConfig JSON (default: extremal orbit)")
    return ap


def _write_cases_csv(path: str, rep: Report) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "kind", "gap", "tol", "pass"])
        for case in rep.cases:
            w.writerow([case.id, case.kind, repr(case.gap), repr(case.tol), case.passed])


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params = make_params(args.n, args.p, args.a)
    except DomainError as exc:
        print(f"sharptrace: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    trace_csv = None
    try:
        if args.command == "constants":
            rep = suites.constants_suite(params)
        else:
            norm = parse_norm(args.norm, args.n)
            scheme = _scheme(args)
            tol = {} if args.tol is None else {"tol": args.tol}
            if args.command == "search":
                config = None
                if args.config:
                    with open(args.config) as fh:
                        config = SearchConfig.from_dict(json.load(fh))
                rep, res = suites.search_suite(params, args.quotient, scheme, args.seed, args.directions,
                                               config=config, lam_mix=args.lam_mix,
                                               norm=norm if args.norm else None, **tol)
                trace_csv = res.trace_csv()
            elif args.suite == "gn":
                samples = 5 if args.samples is None else args.samples
                rep = suites.gn_suite(params, norm, scheme, args.seed, samples=samples, **tol)
            elif args.suite == "dual":
                rep = suites.dual_suite(params, norm, scheme, args.seed, pairs=args.pairs, **tol)
            elif args.suite == "affine":
                samples = 2 if args.samples is None else args.samples
                rep = suites.affine_suite(params, scheme, args.lam_mix, args.seed, samples=samples, **tol)
            elif args.suite == "centroid":
                rep = suites.centroid_suite(params, scheme, args.seed, **tol)
            else:
                rep = suites.transport_suite(params, norm, scheme, args.grid_level, args.seed, **tol)
    except (UsageError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"sharptrace: {exc}", file=sys.stderr)
        return 2
    rep.wall_time = time.perf_counter() - t0
    text = rep.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if getattr(args, "csv", None):
        if trace_csv is not None:
            with open(args.csv, "w") as fh:
                fh.write(trace_csv)
        else:
            _write_cases_csv(args.csv, rep)
    for line in rep.summary_lines():
        print(line, file=sys.stderr)
    return 0 if rep.passed else 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
