"""Bank-removal robustness sweep.

Samples planted bipartite networks (45 borrowers, 30 lenders at the stock
weekly affinities), randomly removes banks down to each target size, and
reports how often model selection still calls the structure bipartite.

    python scripts/removal_robustness.py --reps 200 --targets 70 65 60 50 40
"""
import argparse
import time

from blockscope.inference import InferenceConfig
from blockscope.synth import default_removal_scenario, removal_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--targets", type=int, nargs="+", default=[70, 65, 60, 50, 40, 30])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()

    scenario = default_removal_scenario(seed=args.seed)
    cfg = InferenceConfig(seed=args.seed)
    print(f"{'target_n':>8} {'bipartite%':>11} {'labels':<40} {'secs':>6}")
    for target in args.targets:
        t0 = time.time()
        report = removal_experiment(
            scenario, target, args.reps, seed=args.seed + target, cfg=cfg, threads=args.threads
        )
        labels = ", ".join(f"{k}:{v}" for k, v in sorted(report.label_counts.items()))
        print(f"{target:>8} {100 * report.success_fraction:>10.1f} {labels:<40} {time.time() - t0:>6.1f}")


if __name__ == "__main__":
    main()
