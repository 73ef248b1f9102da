"""Average balance per algorithm for k = 2..K on a benchmark network or SBM.

    python3 scripts/balance_vs_k.py --dataset facebooknet --data-dir data
    python3 scripts/balance_vs_k.py --dataset sbm --n 2000 --groups 3
"""
import argparse
from collections import defaultdict

from fairsmw.algorithms import ALL, run_pipeline
from fairsmw.eigensolve import EigenConvergenceError
from fairsmw.io import MetricsWriter, load_dataset
from fairsmw.sbm import SbmSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataset", default="sbm")
    ap.add_argument("--data-dir", default="data")
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--groups", type=int, default=2)
    ap.add_argument("--kmax", type=int, default=15)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    if args.dataset == "sbm":
        g, gp, _ = generate(SbmSpec(n=args.n, k=4, h=args.groups, seed=args.seed, connectivity_fix=True))
    else:
        b = load_dataset(args.dataset, args.data_dir)
        g, gp = b.graph, b.groups
        for note in b.notes:
            print(f"# {note}")
    print(f"# {args.dataset}: n={g.n} m={g.m} group sizes={gp.group_sizes.tolist()}")
    writer = MetricsWriter(args.out or f"results/balance_{args.dataset}.csv")
    table = defaultdict(dict)
    for k in range(2, args.kmax + 1):
        for name in ALL:
            try:
                r = run_pipeline(name, g, gp, k, seed=args.seed)
            except EigenConvergenceError as exc:
                print(f"# {name} k={k}: {exc}")
                continue
            writer.write(r, args.dataset)
            table[k][name] = r.avg_balance
    print("k    " + "".join(f"{name:>14}" for name in ALL))
    for k, row in table.items():
        print(f"{k:<5}" + "".join(f"{row.get(name, float('nan')):>14.3f}" for name in ALL))


if __name__ == "__main__":
    main()
