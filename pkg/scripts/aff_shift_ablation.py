"""How the aff shift magnitude affects the eigen-gap and restart count.

G_aff = W + c I with c in a sweep from max degree to n. Shifts smaller than
the largest |eigenvalue| of W risk an indefinite Gram matrix, so the sweep
starts at the maximum degree (an upper bound on that eigenvalue).
"""
import argparse

import numpy as np

from fairsmw import operators as ops
from fairsmw.eigensolve import eigen_gap_report
from fairsmw.fairness import build_constraint_matrix
from fairsmw.sbm import SbmSpec, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3000)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--points", type=int, default=6)
    args = ap.parse_args()

    print(f"{'seed':>4} {'shift':>10} {'gap':>10} {'rel gap':>10} {'restarts':>9}")
    for seed in range(args.seeds):
        g, gp, _ = generate(SbmSpec(n=args.n, p_in=6 / args.n, p_out=1 / args.n, seed=seed, connectivity_fix=True))
        F = build_constraint_matrix(gp)
        for c in np.geomspace(g.degree.max(), g.n, args.points):
            U = ops.fair_smw_operator(ops.make_g_operator(g, "aff", shift=c), F)
            rep = eigen_gap_report(U, args.k, seed=seed)
            print(f"{seed:>4} {c:>10.1f} {rep.gap:>10.4g} {rep.relative_gap:>10.3g} {rep.restarts:>9}")


if __name__ == "__main__":
    main()
