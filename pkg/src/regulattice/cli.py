"""Command line entry point: ``regulattice --input A.csv --epsilon 0.3``.

Exit status is 0 when the run ends regular, 2 on quota shortfall or the
iteration cap, and 1 on bad input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .driver import RunConfig, graph_regular_partition, regular_partition, \
    simultaneous_partition, symmetric_regular_partition
from .errors import RegulatticeError
from .fileio import FORMATS, build_report, dumps_report, load_matrix, trajectory_csv

log = logging.getLogger("regulattice")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="regulattice",
        description="Compute an epsilon-regular block partition of a real matrix or graph.",
    )
    p.add_argument("--input", type=Path, help="matrix or graph file")
    p.add_argument("--format", choices=FORMATS, default="csv-dense")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--min-classes", type=int, default=1, help="lower bound L on the class count")
    p.add_argument("--symmetric", action="store_true", help="symmetric partition of a square matrix")
    p.add_argument("--graph", action="store_true", help="treat the input as a graph adjacency")
    p.add_argument("--multi", type=Path, nargs="+", metavar="PATH",
                   help="further matrices to partition simultaneously with --input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle-limit", type=int, default=16)
    p.add_argument("--witness-budget", type=int, default=64)
    p.add_argument("--max-iterations", type=int, default=None)
    p.add_argument("--dense", action="store_true", help="use the uncapped quadratic potential")
    p.add_argument("--report", type=Path, help="write the JSON report here instead of stdout")
    p.add_argument("--trajectory", type=Path, help="write a CSV of the potential per iteration")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _mode(args) -> str:
    if args.graph and (args.symmetric or args.multi):
        raise RegulatticeError("--graph cannot be combined with --symmetric or --multi")
    if args.symmetric and args.multi:
        raise RegulatticeError("--symmetric cannot be combined with --multi")
    if args.graph:
        return "graph"
    if args.symmetric:
        return "symmetric"
    return "multi" if args.multi else "general"


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        mode = _mode(args)
        paths = ([args.input] if args.input else []) + list(args.multi or [])
        if not paths:
            raise RegulatticeError("no input given (use --input)")
        mats = [load_matrix(p, args.format)[0] for p in paths]
        cfg = RunConfig(
            epsilon=args.epsilon, min_classes=args.min_classes, max_iterations=args.max_iterations,
            oracle_limit=args.oracle_limit, witness_budget=args.witness_budget,
            master_seed=args.seed, mode=mode, dense_mode=args.dense,
        )
        if mode == "graph":
            A = mats[0]
            if not A.is_square or not np.array_equal(A.values, A.values.T):
                raise RegulatticeError("--graph needs square symmetric data")
        graph = None
        if mode == "general":
            result = regular_partition(mats[0], cfg)
        elif mode == "symmetric":
            result = symmetric_regular_partition(mats[0], cfg)
        elif mode == "graph":
            graph = graph_regular_partition(mats[0], cfg)
            result = graph.run
        else:
            result = simultaneous_partition(mats, cfg)
    except (RegulatticeError, OSError) as exc:
        print(f"regulattice: error: {exc}", file=sys.stderr)
        return 1

    log.info("status %s after %d iterations", result.status.value, len(result.iterations))
    text = dumps_report(build_report(result, mats, graph))
    if args.report:
        args.report.write_text(text)
    else:
        sys.stdout.write(text)
    if args.trajectory:
        args.trajectory.write_text(trajectory_csv(result))
    return 0 if result.status.success else 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
