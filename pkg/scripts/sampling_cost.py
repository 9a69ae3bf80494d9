"""Smallest shot budget at which the 12-circuit design reaches a target average diamond distance.

    python3 scripts/sampling_cost.py --depth 16 --target 1e-3
"""
import argparse

from ctxgst import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--depth", type=int, default=16)
    ap.add_argument("--target", type=float, default=1e-3)
    ap.add_argument("--repetitions", type=int, default=20)
    ap.add_argument("--seed", type=int, default=6)
    args = ap.parse_args()
    print("n_samples,n_shots,mean_distance,ci_low,ci_high")
    for n in (1_000, 2_000, 5_000, 10_000, 25_000, 60_000, 125_000):
        cfg = ex.ExperimentConfig(depths=(args.depth,), n_samples=n, repetitions=args.repetitions, seed=args.seed)
        row = ex.cmd_scan_depth(cfg)[0]
        print(f"{n},{n * row['n_circuits']},{row['mean_distance']:.4e},{row['ci_low']:.4e},{row['ci_high']:.4e}")
        if row["mean_distance"] <= args.target:
            break


if __name__ == "__main__":
    main()
