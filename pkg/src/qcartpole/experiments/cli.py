"""Command-line entry point: ``qcartpole <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .. import hardware
from ..training import CheckpointError
from . import runner
from .config import apply_overrides, load_config
from .results import BaselineReport, export_results, load_matrices

log = logging.getLogger("qcartpole")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    common.add_argument("--seeds", type=int, help="override the number of seeds")
    common.add_argument("--workers", type=int, default=1, help="worker processes")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="config override such as sweep.episodes=200 (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qcartpole", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("baseline", parents=[common], help="classical vs hybrid sample-efficiency ensemble")
    sub.add_parser("train-sweep", parents=[common], help="train hybrid agents across control frequencies")
    ev = sub.add_parser("eval-matrix", parents=[common], help="noisy inference duration matrices")
    ev.add_argument("--checkpoints", type=Path, help="sweep output directory (default: --out)")
    lat = sub.add_parser("latency", parents=[common], help="fit the latency model and report feasibility")
    lat.add_argument("--csv", type=Path, help="timing observations with columns shots,rate_hz[,path]")
    lat.add_argument("--matrices", type=Path, help="duration matrices (default: <out>/matrices.json if present)")
    ex = sub.add_parser("export", parents=[common], help="convert a stored result file")
    ex.add_argument("source", type=Path, help="matrices.json / matrices.csv / baseline.json")
    ex.add_argument("dest", type=Path)
    ex.add_argument("--format", choices=["csv", "json"])
    return p


def _config(args):
    cfg = apply_overrides(load_config(args.config), args.overrides)
    if args.seeds is not None:
        cfg = replace(cfg, baseline=replace(cfg.baseline, seeds=args.seeds), sweep=replace(cfg.sweep, seeds=args.seeds))
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        out: Path = args.out
        if args.command == "baseline":
            report = runner.cmd_baseline(cfg.baseline, out, args.workers)
            export_results(report, out / "baseline.json")
            print(report.format())
        elif args.command == "train-sweep":
            ckpts = runner.cmd_train_sweep(cfg.sweep, out, args.workers)
            expected = len(cfg.sweep.train_freqs) * cfg.sweep.seeds
            print(f"{len(ckpts)}/{expected} checkpoints written under {out / 'checkpoints' / 'sweep'}")
            if len(ckpts) < expected:
                return 1
        elif args.command == "eval-matrix":
            matrices = runner.cmd_eval_matrix(args.checkpoints or out, cfg.sweep, args.workers)
            export_results(matrices, out / "matrices.json")
            export_results(matrices, out / "matrices.csv")
            for m in matrices:
                print(m.format(), end="\n\n")
        elif args.command == "latency":
            obs = hardware.read_observations_csv(args.csv) if args.csv else None
            mpath = args.matrices or (out / "matrices.json")
            matrices = load_matrices(mpath) if mpath.exists() else None
            report = runner.cmd_latency(obs, matrices)
            report.pop("_timing")
            export_results(report, out / "latency.json")
            print(runner.format_latency(report))
        elif args.command == "export":
            src = args.source
            if src.suffix == ".csv" or "matrices" in json.loads(src.read_text()):
                obj = load_matrices(src)
            else:
                obj = BaselineReport.from_dict(json.loads(src.read_text()))
            print(export_results(obj, args.dest, args.format))
    except (OSError, ValueError, KeyError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
