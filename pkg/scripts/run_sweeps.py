"""Run the consumers/providers/movements sweeps and report each trend claim.

    python scripts/run_sweeps.py --dataset data/gowalla --outdir results/gowalla
    python scripts/run_sweeps.py --synthetic --outdir results/synthetic
"""

import argparse
import time
from pathlib import Path

from trustscope.experiments import (
    EXPERIMENTS,
    ExperimentSpec,
    evaluate_trends,
    load_workloads,
    resolve_dataset,
    run_sweep,
    summarize,
)
from trustscope.simulation import prepare_workload, write_results
from trustscope.synthetic import WorldConfig, generate_world


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset")
    src.add_argument("--synthetic", action="store_true", help="use the built-in synthetic world")
    p.add_argument("--cells", type=int, default=500)
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--experiments", default=",".join(EXPERIMENTS))
    p.add_argument("--outdir")
    args = p.parse_args()

    seeds = tuple(int(s) for s in args.seeds.split(","))
    if args.synthetic:
        checkins, _ = generate_world(WorldConfig(users=12000, locations=2000, checkins_per_user=20))
        workloads = {s: prepare_workload(checkins, args.cells, s) for s in seeds}
    else:
        workloads = load_workloads(resolve_dataset(args.dataset).checkins, args.cells, seeds)

    failed = 0
    for name in args.experiments.split(","):
        spec = ExperimentSpec(name, microcell_count=args.cells, seeds=seeds)
        start = time.perf_counter()
        rows = run_sweep(spec, workloads)
        elapsed = time.perf_counter() - start
        if args.outdir:
            out = Path(args.outdir)
            out.mkdir(parents=True, exist_ok=True)
            with open(out / f"{name}.csv", "w", newline="") as fh:
                write_results(rows, fh)
        print(f"== {name} sweep ({elapsed:.0f}s)", flush=True)
        for check in evaluate_trends(name, summarize(spec, rows)):
            failed += not check.passed
            print(f"  {'PASS' if check.passed else 'FAIL'}  {check.claim}: {check.detail}", flush=True)
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
