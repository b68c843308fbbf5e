"""Command-line interface: ``smreg {invert, analyze, simulate, compare}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from .config import parse_config
from .errors import SmregError
from .experiment import compare_iterations, run_experiment
from .matrix import hermitian_eig, read_matrix, write_matrix
from .methods import METHODS, invert
from .precoding import make_channel
from .smr import SCENARIOS
from .spectral import condition_number, residual_model, xi_thresholds

log = logging.getLogger("smreg")


def _float_or_auto(text: str):
    return "auto" if text == "auto" else float(text)


def _omega(text: str):
    return text if text in ("gershgorin", "optimal") else float(text)


def _float_list(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_invert(args) -> int:
    a = read_matrix(args.matrix)
    res = invert(
        a, args.method, tol=args.tol, max_iter=args.max_iter, iterations=args.iterations,
        omega=args.omega, alpha=args.alpha, scenario=args.scenario, xi=args.xi,
        smr_mode=args.mode, column=args.column,
    )
    if args.out:
        write_matrix(args.out, res.inverse)
    if res.trace is not None:
        csv = res.trace.to_csv()
        if args.trace:
            Path(args.trace).write_text(csv)
        else:
            sys.stdout.write(csv)
        if args.iterations is None and not res.converged:
            log.warning("%s stopped after %d iterations at residual %.3e (tol %.1e)",
                        args.method, res.iterations, res.trace.final_residual, args.tol)
    print(f"# method={args.method} iterations={res.iterations}", file=sys.stderr)
    return 0


def cmd_analyze(args) -> int:
    spec = hermitian_eig(read_matrix(args.matrix), method=args.eig)
    kappa = condition_number(spec)
    print("spectrum:", " ".join(f"{v:.6g}" for v in spec.values))
    print(f"kappa: {kappa:.6g}")
    if spec.size >= 2:
        pair = (spec.values[-2], spec.values[-1])
        if pair[0] > pair[1]:
            t1, t2 = xi_thresholds(pair)
            print(f"xi_T1: {t1:.6g}")
            print(f"xi_T2: {t2:.6g}")
        else:
            print("xi_T1: undefined (degenerate trailing pair)")
    print("t,residual_model")
    for t in range(11):
        print(f"{t},{residual_model(kappa, t):.6e}")
    return 0


def cmd_simulate(args) -> int:
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    if args.dump_channel:
        write_matrix(args.dump_channel, make_channel(cfg, cfg.base_seed).H)
    summary = run_experiment(cfg, args.out, sweep_alpha=args.sweep_alpha, workers=args.workers)
    print(f"wrote {len(summary['files']) + 1} files to {args.out} "
          f"(config {summary['config_hash'][:12]})")
    return 0


def cmd_compare(args) -> int:
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    report = compare_iterations(cfg, args.reference, args.candidate, args.realizations)
    if args.json:
        print(json.dumps(asdict(report), indent=2))
    else:
        print(report.summary())
        for trial, reason in report.excluded:
            print(f"  excluded trial {trial}: {reason}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smreg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("invert", help="invert a matrix file and print the residual trace")
    p.add_argument("matrix")
    p.add_argument("--method", choices=METHODS, default="hb")
    p.add_argument("--alpha", type=_float_or_auto, default="auto")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="symmetric-rayleigh")
    p.add_argument("--xi", type=_float_or_auto, default="auto")
    p.add_argument("--mode", choices=("lowcomplexity", "theorem1", "theorem2"),
                   default="lowcomplexity")
    p.add_argument("--column", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--iterations", type=int, default=None,
                   help="run exactly this many updates, ignoring --tol")
    p.add_argument("--omega", type=_omega, default="gershgorin",
                   help="gershgorin, optimal, or a number")
    p.add_argument("--out", help="write the inverse in matrix text format")
    p.add_argument("--trace", help="write the residual CSV here instead of stdout")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("analyze", help="spectrum, condition number and xi thresholds")
    p.add_argument("matrix")
    p.add_argument("--eig", choices=("jacobi", "lapack"), default="jacobi")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="run an SER experiment from a config file")
    p.add_argument("config")
    p.add_argument("--out", default="results")
    p.add_argument("--sweep-alpha", type=_float_list, default=None)
    p.add_argument("--dump-channel", help="write the first channel realization H here")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: SMREG_WORKERS or CPU count)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="iterations-to-tol of two methods")
    p.add_argument("config")
    p.add_argument("--reference", default="hb")
    p.add_argument("--candidate", default="smr")
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SmregError, ValueError, OSError) as exc:
        print(f"smreg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
