"""Experiment harness: barriers, solves, sequences, limits, rates, selftest.

Exit codes: 0 success, 1 selftest failure, 2 invalid configuration,
3 nonconvergence or a diverges verdict (report still written), 4 internal
numerical failure.  Flags can also come from a JSON config file
(--config); explicit flags win.  HESS_THREADS caps the worker pool used
for boundary-value sweeps.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .barriers import make_grad_barrier, make_sub_barrier, make_super_barrier, threshold_radius
from .families import parse_eta, parse_psi
from .radialop import RadialProfile
from .shooter import (
    NonconvergenceError,
    blowup_limit,
    monotone_sequence,
    rate_fit,
    solve_dirichlet_ball,
)
from .symcone import Dim
from .verify import check_subsolution, check_supersolution

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_CONFIG = 2
EXIT_NOCONV = 3
EXIT_NUMERICS = 4


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dim(args) -> Dim:
    return Dim(args.n, args.k)


def _workers() -> int:
    raw = os.environ.get("HESS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="khessian", description=__doc__)
    parser.add_argument("--config", help="JSON file with default values for the subcommand flags")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_dim(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("threshold", help="non-existence threshold radius for gradient-power growth")
    add_dim(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--json", dest="json_out")

    p = sub.add_parser("solve", help="Dirichlet shooting solve on a ball")
    add_dim(p)
    p.add_argument("--psi", required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out-profile")
    p.add_argument("--out-report")

    p = sub.add_parser("sequence", help="monotone boundary-value ladder")
    add_dim(p)
    p.add_argument("--psi", required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--m-max", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out-dir")

    p = sub.add_parser("limit", help="blow-up limit of the ladder with envelope checks")
    add_dim(p)
    p.add_argument("--psi", required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--m-cap", type=int, default=40)
    p.add_argument("--out-dir")

    p = sub.add_parser("barrier", help="construct and certify an explicit barrier")
    add_dim(p)
    p.add_argument("--type", choices=("sub", "super", "grad"), required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--eta", default="const:1")
    p.add_argument("--M", type=float, default=1.0)
    p.add_argument("--q", type=float, default=None)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rates", help="blow-up rate fit of a stored profile")
    add_dim(p)
    p.add_argument("--profile", required=True)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--q", type=float, required=True)

    p = sub.add_parser("verify", help="sub/supersolution certificate for a stored profile")
    add_dim(p)
    p.add_argument("--profile", required=True)
    p.add_argument("--R", type=float, default=None)
    p.add_argument("--psi", required=True)
    p.add_argument("--side", choices=("sub", "super"), required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out-report")

    p = sub.add_parser("selftest", help="run the acceptance suite")
    return parser


def _cmd_threshold(args) -> int:
    a_star = threshold_radius(_dim(args), args.alpha, args.M)
    print(f"a* = {a_star!r}")
    if args.json_out:
        _write_json(args.json_out, {"a_star": a_star, "n": args.n, "k": args.k,
                                    "alpha": args.alpha, "M": args.M})
    return EXIT_OK


def _cmd_solve(args) -> int:
    dim = _dim(args)
    psi = parse_psi(args.psi, dim.k)
    rep = solve_dirichlet_ball(psi, dim, args.R, args.m, tol=args.tol)
    print(
        f"converged={rep.converged} u(0)={rep.c:.12g} boundary_gap={rep.boundary_gap:.3g} "
        f"residual={rep.residual:.3g} iterations={rep.iterations}"
        + (f" blowup_radius={rep.blowup_radius:.12g}" if rep.blowup_radius is not None else "")
    )
    if args.out_profile and rep.profile is not None:
        rep.profile.to_csv(args.out_profile)
    if args.out_report:
        _write_json(args.out_report, rep.to_json_dict(profile_csv_path=args.out_profile))
    return EXIT_OK if rep.converged else EXIT_NOCONV


def _cmd_sequence(args) -> int:
    dim = _dim(args)
    psi = parse_psi(args.psi, dim.k)
    ms = list(range(1, args.m_max + 1))
    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(
                pool.map(lambda m: solve_dirichlet_ball(psi, dim, args.R, float(m), tol=args.tol), ms)
            )
    else:
        reports = monotone_sequence(psi, dim, args.R, args.m_max, tol=args.tol)
    ok = True
    for rep in reports:
        print(f"m={rep.m:g} converged={rep.converged} u(0)={rep.c:.12g}")
        ok = ok and rep.converged
        if args.out_dir:
            os.makedirs(args.out_dir, exist_ok=True)
            stem = os.path.join(args.out_dir, f"m{int(rep.m):03d}")
            if rep.profile is not None:
                rep.profile.to_csv(stem + ".csv")
            _write_json(stem + ".json", rep.to_json_dict(profile_csv_path=stem + ".csv"))
    return EXIT_OK if ok else EXIT_NOCONV


def _cmd_limit(args) -> int:
    dim = _dim(args)
    psi = parse_psi(args.psi, dim.k)
    res = blowup_limit(psi, dim, args.R, tol=args.tol, m_cap=args.m_cap)
    print(
        f"verdict={res.verdict} rungs={len(res.reports)} "
        f"u(0)={res.reports[-1].c:.12g} lower_slack={res.lower_slack:.3g} "
        f"upper_slack={res.upper_slack:.3g}"
    )
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        if res.limit is not None:
            res.limit.to_csv(os.path.join(args.out_dir, "limit.csv"))
        _write_json(
            os.path.join(args.out_dir, "limit.json"),
            {
                "verdict": res.verdict,
                "rungs": len(res.reports),
                "centres": [r.c for r in res.reports],
                "increments": res.increments,
                "lower_slack": res.lower_slack,
                "upper_slack": res.upper_slack,
                "domination_slack": res.domination_slack,
                "enclosing_radii": res.enclosing_radii,
            },
        )
    return EXIT_OK if res.verdict == "exists" else EXIT_NOCONV


def _cmd_barrier(args) -> int:
    dim = _dim(args)
    if args.type == "sub":
        barrier = make_sub_barrier(args.a, dim, parse_eta(args.eta))
        profile = barrier.profile(n_nodes=args.nodes)
        cert = barrier.certificate(n_nodes=args.nodes)
    elif args.type == "super":
        if args.q is None or args.q <= dim.k:
            raise ValueError("super barrier requires --q greater than k")
        barrier = make_super_barrier(args.a, args.M, args.q, dim)
        profile = barrier.profile(n_nodes=args.nodes)
        cert = barrier.certificate(n_nodes=args.nodes)
    else:
        barrier = make_grad_barrier(args.a, dim, args.alpha, n_nodes=args.nodes)
        profile = barrier.profile()
        cert = barrier.certificate()
    profile.to_csv(args.out)
    print(f"type={args.type} certified={cert.passed} min_slack={cert.min_slack:.3g} nodes={cert.node_count}")
    return EXIT_OK if cert.passed else EXIT_NUMERICS


def _cmd_rates(args) -> int:
    dim = _dim(args)
    profile = RadialProfile.from_csv(args.profile, R=args.R)
    slope, ratio = rate_fit(profile, args.M, args.q, dim)
    print(f"exponent={slope:.12g} envelope_ratio_max={ratio:.12g}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    dim = _dim(args)
    psi = parse_psi(args.psi, dim.k)
    profile = RadialProfile.from_csv(args.profile, R=args.R)
    if args.side == "sub":
        rep = check_subsolution(profile, psi, dim, tol=args.tol)
    else:
        rep = check_supersolution(profile, psi, dim, tol=args.tol)
    print(f"side={args.side} passed={rep.passed} min_slack={rep.min_slack:.3g} nodes={rep.node_count}")
    if args.out_report:
        _write_json(args.out_report, {"side": args.side, "checks": rep.to_json_dict()})
    return EXIT_OK if rep.passed else EXIT_NOCONV


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    results = run_selftest(verbose=True)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("FAILED: " + ", ".join(failed))
        return EXIT_SELFTEST
    print(f"all {len(results)} checks passed")
    return EXIT_OK


_COMMANDS = {
    "threshold": _cmd_threshold,
    "solve": _cmd_solve,
    "sequence": _cmd_sequence,
    "limit": _cmd_limit,
    "barrier": _cmd_barrier,
    "rates": _cmd_rates,
    "verify": _cmd_verify,
    "selftest": _cmd_selftest,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    # config file supplies defaults; explicit flags override because they
    # are parsed after set_defaults
    if "--config" in argv:
        try:
            cfg_path = argv[argv.index("--config") + 1]
            with open(cfg_path) as fh:
                defaults = json.load(fh)
            if not isinstance(defaults, dict):
                raise ValueError("config file must hold a JSON object")
        except (IndexError, OSError, ValueError, json.JSONDecodeError) as exc:
            print(f"error: bad config file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for action in parser._subparsers._group_actions:  # noqa: SLF001
            for sp in action.choices.values():
                sp.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonconvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOCONV
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
