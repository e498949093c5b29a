"""Command-line entry point.

    relcm run <system> [flags] --config <file> --out <dir>
    relcm sweep --config <file> --out <dir>
    relcm pb-suite --system <id> [--out <dir>]

Configs are JSON files whose keys match the per-system defaults in
relcm.experiments; command-line flags override config values.  Exit codes:
0 all gates passed, 1 gate failure, 2 usage/config error, 3 numerical
failure (singularity, step underflow) with the sigma location.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import experiments as exp
from .integrate import FlowSingularityError
from .poisson import SingularEvaluationError


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise exp.UsageError(f"config file not found: {path}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise exp.UsageError(f"config file is not valid JSON: {err}") from err
    if not isinstance(cfg, dict):
        raise exp.UsageError("config file must hold a JSON object")
    return cfg


def _flag_overrides(args: argparse.Namespace) -> dict:
    over: dict = {}
    for key in ("n", "equal_masses", "mass_ratio", "m_factor"):
        val = getattr(args, key, None)
        if val not in (None, False):
            over[key] = val
    if getattr(args, "bound", None):
        over["bound"] = True
        over.setdefault("orbit", "bound")
    if getattr(args, "unbound", None):
        over["bound"] = False
        over.setdefault("orbit", "unbound")
    integ = {}
    for key in ("method", "h", "atol", "rtol"):
        val = getattr(args, key, None)
        if val is not None:
            integ[key] = val
    if integ:
        over["integrator"] = integ
    return over


def _filter_keys(over: dict, defaults: dict) -> dict:
    return {k: v for k, v in over.items() if k in defaults}


def cmd_run(args: argparse.Namespace) -> int:
    if args.system not in exp.RUNNERS:
        raise exp.UsageError(f"unknown system {args.system!r}")
    config = _load_config(args.config)
    runner = exp.RUNNERS[args.system]
    defaults = {
        "free-nbody": exp.FREE_DEFAULTS,
        "pn2": exp.PN_DEFAULTS,
        "sv2": exp.SV_DEFAULTS,
        "coulomb-scalar": exp.COULOMB_DEFAULTS,
        "pb-suite": exp.PB_DEFAULTS,
    }[args.system]
    config.update(_filter_keys(_flag_overrides(args), defaults))

    t0 = time.perf_counter()
    report, artifacts = runner(config, seed=args.seed)
    elapsed = time.perf_counter() - t0
    outdir = exp.write_outputs(report, artifacts, args.out, plotdata=args.plotdata)
    print(f"wrote {outdir / 'report.json'}", file=sys.stderr)
    print(f"[{report.system}] {len(report.checks)} checks in {elapsed:.2f}s", file=sys.stderr)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"  {status} {c.name} [{c.law}]: {c.residual:.3e} (gate {c.gate:.1e})")
    print(f"verdict: {'PASS' if report.verdict else 'FAIL'}")
    return 0 if report.verdict else 1


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    report, artifacts = exp.run_sweep(config, seed=args.seed)
    outdir = exp.write_outputs(report, artifacts, args.out)
    print(f"wrote {outdir / 'report.json'}", file=sys.stderr)
    for p in report.extras.get("points", []):
        print(
            "  "
            + "  ".join(
                f"{k}={v:+.4g}" if isinstance(v, float) else f"{k}={v}"
                for k, v in p.items()
            )
        )
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"  {status} {c.name} [{c.law}]: {c.residual:.3e}")
    print(f"verdict: {'PASS' if report.verdict else 'FAIL'}")
    return 0 if report.verdict else 1


def cmd_pb_suite(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.system is not None:
        config["system"] = args.system
    report, artifacts = exp.run_pb_suite(config, seed=args.seed)
    exp.write_outputs(report, artifacts, args.out)
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"  {status} {c.name} [{c.law}]: {c.residual:.3e} (gate {c.gate:.1e})")
    print(f"verdict: {'PASS' if report.verdict else 'FAIL'}")
    return 0 if report.verdict else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relcm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one system's verification battery")
    p_run.add_argument("system", choices=sorted(exp.RUNNERS))
    p_run.add_argument("--config", default=None)
    p_run.add_argument("--out", default="relcm_out")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--n", type=int, default=None, help="particle count (free-nbody)")
    p_run.add_argument("--equal-masses", dest="equal_masses", action="store_true")
    p_run.add_argument("--mass-ratio", dest="mass_ratio", type=float, default=None)
    p_run.add_argument("--m-factor", dest="m_factor", type=float, default=None, help="M_target / M0 (sv2)")
    p_run.add_argument("--bound", action="store_true")
    p_run.add_argument("--unbound", action="store_true")
    p_run.add_argument("--method", choices=["rk4", "rk45"], default=None)
    p_run.add_argument("--h", type=float, default=None, help="rk4 step size")
    p_run.add_argument("--atol", type=float, default=None)
    p_run.add_argument("--rtol", type=float, default=None)
    p_run.add_argument("--plotdata", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep a parameter axis and aggregate")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default="relcm_out")
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.set_defaults(func=cmd_sweep)

    p_pb = sub.add_parser("pb-suite", help="run the bracket-identity battery")
    p_pb.add_argument("--system", choices=["free-nbody", "sv2"], default=None)
    p_pb.add_argument("--config", default=None)
    p_pb.add_argument("--out", default="relcm_out")
    p_pb.add_argument("--seed", type=int, default=0)
    p_pb.set_defaults(func=cmd_pb_suite)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except exp.UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (FlowSingularityError, SingularEvaluationError, ZeroDivisionError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except ValueError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
