"""Command line entry point: ``bench <command> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .metrics import aggregate
from .oracles import check_f_transform, check_series_quadrature
from .runner import (ALPHA_GRID, ALPHA_SWEEP_SNR, SNAPSHOT_GRID, SNAPSHOT_SWEEP_SNR, sweep_alpha,
                     sweep_snapshots, sweep_snr, write_outputs)
from .scenario import ESTIMATORS, Scenario, reference_scenario


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser, scenario_required: bool = False):
    if scenario_required:
        p.add_argument("scenario", type=Path, help="scenario JSON file")
    else:
        p.add_argument("--scenario", type=Path, default=None,
                       help="scenario JSON file (default: built-in 15-sensor scenario)")
    p.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per point")
    p.add_argument("--seed", type=int, default=None, help="base seed; trial m uses seed + m")
    p.add_argument("--out", type=Path, default=Path("bench_out"), help="output directory")
    p.add_argument("--parallel", type=int, default=1, help="worker processes")
    p.add_argument("--estimator", choices=ESTIMATORS, default=None,
                   help="run a single estimator instead of the scenario's list")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bench", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="SNR sweep of a scenario file")
    _common(p, scenario_required=True)

    p = sub.add_parser("sweep-snr", help="RMSE versus SNR")
    _common(p)
    p.add_argument("--snr", type=_floats, default=None, help="comma separated SNR grid (dB)")

    p = sub.add_parser("sweep-snapshots", help="RMSE versus snapshot count")
    _common(p)
    p.add_argument("--snapshots", type=lambda s: [int(v) for v in _floats(s)],
                   default=list(SNAPSHOT_GRID))
    p.add_argument("--snr", type=float, default=SNAPSHOT_SWEEP_SNR)

    p = sub.add_parser("sweep-alpha", help="correct-order probability versus alpha")
    _common(p)
    p.add_argument("--alphas", type=_floats, default=list(ALPHA_GRID))
    p.add_argument("--snr", type=float, default=ALPHA_SWEEP_SNR)

    p = sub.add_parser("oracle-check", help="F-transform and quadrature self-checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None,
                   help="override the number of random cases of both checks")
    return ap


def _scenario(args) -> Scenario:
    scn = Scenario.load(args.scenario) if args.scenario else reference_scenario()
    over = {}
    if args.trials is not None:
        over["trials"] = args.trials
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "snr", None) is not None and isinstance(args.snr, list):
        over["snr_db"] = args.snr
    if over:
        d = scn.to_dict()
        d.update(over)
        scn = Scenario.from_dict(d)
    return scn


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "oracle-check":
        reports = [check_f_transform(args.trials or 1000, args.seed),
                   check_series_quadrature(args.trials or 100, args.seed)]
        for r in reports:
            print(r.line())
        return 0 if all(r.passed for r in reports) else 1

    scn = _scenario(args)
    if args.command in ("run", "sweep-snr"):
        records = sweep_snr(scn, args.parallel, args.estimator)
        rows, name = aggregate(records, "snr_db"), "snr" if args.command == "sweep-snr" else "run"
    elif args.command == "sweep-snapshots":
        records = sweep_snapshots(scn, args.snapshots, args.snr, args.parallel, args.estimator)
        rows, name = aggregate(records, "snapshots"), "snapshots"
    else:
        records = sweep_alpha(scn, args.alphas, args.snr, args.parallel)
        rows, name = aggregate(records, "alpha"), "alpha"

    for path in write_outputs(rows, args.out, name):
        print(path)
    for r in rows:
        print(f"{r.sweep}={r.value:g} {r.estimator:>22s}  rmse={r.rmse_angles:.4g} deg  "
              f"coupling={r.rmse_coupling_pct:.4g} %  P(k=K)={r.correct_order_prob:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
