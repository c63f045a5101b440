"""Model-selection calibration on structureless networks.

Draws one-block random directed graphs over a grid of sizes and densities
and reports how often the selected model is effectively one block.  Anything
much below 100% at realistic sizes would mean the description-length penalty
is too weak.

    python scripts/null_calibration.py --reps 100
"""
import argparse

import numpy as np

from blockscope.inference import InferenceConfig, select_model
from blockscope.rng import spawn_seed
from blockscope.sbm import BERNOULLI, AffinityMatrix, BlockAssignment, sample


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--sizes", type=int, nargs="+", default=[40, 75, 120])
    ap.add_argument("--densities", type=float, nargs="+", default=[0.02, 0.05, 0.10])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"{'n':>5} {'density':>8} {'random%':>8}")
    for n in args.sizes:
        g = BlockAssignment((0,) * n, 1)
        for rho in args.densities:
            p = AffinityMatrix(np.array([[rho]]), BERNOULLI)
            hits = 0
            for rep in range(args.reps):
                net = sample(g, p, spawn_seed(args.seed, n, int(rho * 1000), rep))
                res = select_model(net, InferenceConfig(seed=spawn_seed(args.seed + 1, n, rep)))
                hits += res.effective_blocks == 1
            print(f"{n:>5} {rho:>8.3f} {100 * hits / args.reps:>7.1f}")


if __name__ == "__main__":
    main()
