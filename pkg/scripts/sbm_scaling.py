"""Runtime, restarts and error of every pipeline on SBM graphs of growing size.

    python3 scripts/sbm_scaling.py --sizes 1000 2000 4000 --seeds 3 --out results/scaling.csv
"""
import argparse
import csv
import time
from pathlib import Path

import numpy as np

from fairsmw.algorithms import ALL, run_pipeline
from fairsmw.sbm import SbmSpec, generate

FIELDS = ["n", "m", "seed", "algorithm", "error", "avg_balance", "total_s", "eigs_s", "restarts", "matvecs"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1000, 2000, 4000, 8000])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--sparse", action="store_true", help="use p_in=6/n, p_out=1/n instead of the q scaling")
    ap.add_argument("--algorithms", nargs="+", default=list(ALL))
    ap.add_argument("--out", default="results/sbm_scaling.csv")
    args = ap.parse_args()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, FIELDS)
        writer.writeheader()
        for n in args.sizes:
            for seed in range(args.seeds):
                kw = dict(p_in=6 / n, p_out=1 / n) if args.sparse else {}
                g, gp, truth = generate(SbmSpec(n=n, k=args.k, seed=seed, connectivity_fix=True, **kw))
                for name in args.algorithms:
                    run_pipeline(name, g, gp, args.k, seed=seed)  # warm-up
                    r = run_pipeline(name, g, gp, args.k, seed=seed, truth=truth)
                    row = dict(n=n, m=g.m, seed=seed, algorithm=name, error=r.error, avg_balance=r.avg_balance,
                               total_s=r.total_s, eigs_s=r.eigs_s, restarts=r.restarts, matvecs=r.matvecs)
                    writer.writerow(row)
                    fh.flush()
            print(f"n={n:<6} done at {time.strftime('%H:%M:%S')}")

    rows = list(csv.DictReader(open(out)))
    print(f"\n{'n':>6} {'algorithm':<14} {'error':>7} {'eigs_s':>9} {'restarts':>9}")
    for n in args.sizes:
        for name in args.algorithms:
            sel = [r for r in rows if int(r["n"]) == n and r["algorithm"] == name]
            print(f"{n:>6} {name:<14} {np.mean([float(r['error']) for r in sel]):>7.4f} "
                  f"{np.mean([float(r['eigs_s']) for r in sel]):>9.4f} "
                  f"{np.mean([int(r['restarts']) for r in sel]):>9.1f}")


if __name__ == "__main__":
    main()
