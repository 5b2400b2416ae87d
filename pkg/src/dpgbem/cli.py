"""Command-line driver for the convergence studies."""
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .exceptions import DPGError
from .experiments import (ExperimentConfig, emit_gnuplot, record_summary, run_experiment)

FLAGS = ("experiment", "levels", "degree_increment", "tol", "out", "quad_profile",
         "dump_mesh", "seed")


def build_parser():
    p = argparse.ArgumentParser(prog="dpgbem", description=__doc__)
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--experiment", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--levels", type=int, help="number of refinement levels (starting at 0)")
    p.add_argument("--degree-increment", type=int, choices=(1, 2, 3))
    p.add_argument("--tol", type=float, help="relative CG tolerance")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--quad-profile", choices=("fast", "accurate"))
    p.add_argument("--dump-mesh", help="write the finest mesh as OBJ")
    p.add_argument("--seed", type=int)
    p.add_argument("--gnuplot", help="also write a gnuplot script for the CSV")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args):
    base = ExperimentConfig()
    if args.config:
        base = ExperimentConfig.from_text(Path(args.config).read_text())
    kw = {f: getattr(base, f) for f in ("experiment", "levels", "degree_increment", "tol", "out",
                                        "quad_profile", "dump_mesh", "seed", "nodal_values")}
    for f in FLAGS:
        v = getattr(args, f)
        if v is not None:
            kw[f] = v
    return ExperimentConfig(**kw)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (OSError, ValueError) as exc:
        print(f"dpgbem: invalid configuration: {exc}", file=sys.stderr)
        return 2
    try:
        record = run_experiment(cfg)
    except (DPGError, OSError) as exc:
        print(f"dpgbem: error: {exc}", file=sys.stderr)
        return 1
    if record.nodal_values is not None:
        print("manufactured phi nodal values: "
              + np.array2string(record.nodal_values, precision=6, separator=", "))
    print(record_summary(record))
    if args.gnuplot:
        if not cfg.out:
            print("dpgbem: --gnuplot needs --out", file=sys.stderr)
            return 2
        emit_gnuplot(record, cfg.out, args.gnuplot)
    return 0


if __name__ == "__main__":
    sys.exit(main())
