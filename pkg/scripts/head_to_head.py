#!/usr/bin/env python3
"""Archive search vs population search on the bipartite coverage family.

Both algorithms get the same evaluation budget and the same number of initial
solutions (one per descriptor cell).  Prints per-algorithm aggregates and,
for the population search, how many trials ever committed to the deceptive
column-only region.

Example:
    python scripts/head_to_head.py --n 30 --budget 260000 --trials 20
"""

import argparse
import sys

from qdpb.core import Solution
from qdpb.harness import ExperimentConfig, ProblemSpec, export_report, run_experiment
from qdpb.instances import Example1Params
from fractions import Fraction


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=30)
    ap.add_argument("--delta", default="1/10")
    ap.add_argument("--budget", type=int, default=260_000)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--master-seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--rows-prefix", help="write PREFIX-map-elites.csv / PREFIX-ea.csv")
    args = ap.parse_args()

    params = Example1Params(args.n, Fraction(args.delta))
    spec = ProblemSpec(kind="example1", n=args.n, delta=args.delta)
    print(
        f"bipartite instance: n={args.n} delta={args.delta} "
        f"OPT={params.opt_fitness} deceptive value={params.local_fitness}"
    )
    left_mask = (1 << params.left_count) - 1

    for algo in ("map-elites", "ea"):
        report = run_experiment(
            ExperimentConfig(
                problem=spec,
                algorithm=algo,
                budget=args.budget,
                trials=args.trials,
                master_seed=args.master_seed,
                workers=args.workers,
                milestone_every=max(1, args.budget // 50),
            )
        )
        agg = report.aggregate
        hits = sum(r.ratio is not None and r.ratio >= 0.95 for r in report.records)
        line = (
            f"{algo:>10}: median ratio {agg.median_ratio:.3f}  "
            f"ratio>=0.95 in {hits}/{args.trials} trials  "
            f"median coverage {sorted(r.coverage for r in report.records)[args.trials // 2]}"
        )
        if algo == "ea":
            committed = sum(
                r.best_solution is not None
                and Solution.from_string(r.best_solution).word & left_mask == 0
                for r in report.records
            )
            line += f"  column-only final best in {committed}/{args.trials}"
        print(line)
        if args.rows_prefix:
            out = f"{args.rows_prefix}-{algo}.csv"
            export_report(report, out, form="rows")
            print(f"           wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
