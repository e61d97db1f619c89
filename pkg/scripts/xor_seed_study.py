"""Stable-basin fraction of the XOR model across master seeds.

Prints one row per seed and a pooled row; compare with the predicted 3/32. Each seed runs the
N=500, lambda=1000, alpha=0.1, K=4 experiment (500 runs of 100N steps).

    python scripts/xor_seed_study.py --seeds 1 2 3 12345 [--runs 500] [--threads 4]
"""

import argparse
import math

from sgdlimits.fixedpoints import xor_success_probability
from sgdlimits.harness import ExperimentConfig, run_ensemble


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 12345])
    p.add_argument("--runs", type=int, default=500)
    p.add_argument("--N", type=int, default=500)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    hits = total = 0
    print("seed,stable,runs,fraction,se")
    for seed in args.seeds:
        cfg = ExperimentConfig.from_dict({
            "model": {"family": "xor", "N": args.N, "K": 4, "lambda": 1000.0, "alpha": 0.1},
            "steps": 100 * args.N, "runs": args.runs, "master_seed": seed, "record_stride": 100 * args.N})
        st = run_ensemble(cfg, threads=args.threads, keep_trajectories=False).stable_fraction()
        n = round(st["count"] / st["fraction"]) if st["fraction"] else args.runs
        hits, total = hits + st["count"], total + n
        print(f"{seed},{st['count']},{n},{st['fraction']:.4f},{st['se']:.4f}")
    p_hat = hits / total
    print(f"pooled,{hits},{total},{p_hat:.4f},{math.sqrt(p_hat * (1 - p_hat) / total):.4f}")
    print(f"predicted,,,{xor_success_probability(4)[1]:.5f},")


if __name__ == "__main__":
    main()
