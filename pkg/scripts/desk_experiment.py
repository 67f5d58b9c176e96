#!/usr/bin/env python3
"""Run the synthetic end-to-end experiment and print M2 scores.

    python scripts/desk_experiment.py [--epochs 10] [--seed 0] [--out results.json]
"""

import argparse
import json

from detcor.desk import DeskConfig, run_desk_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-train", type=int, default=5000)
    ap.add_argument("--n-test", type=int, default=1000)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--beam", type=int, default=1)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = DeskConfig(n_train=args.n_train, n_test=args.n_test, epochs=args.epochs,
                     seed=args.seed, beam=args.beam)
    res = run_desk_experiment(cfg, log=print)
    print(f"{'system':<14}{'P':>8}{'R':>8}{'F0.5':>8}")
    for name in ("copy", "random_fill", "pipeline"):
        r = res[name]
        print(f"{name:<14}{r['precision']:>8.4f}{r['recall']:>8.4f}{r['f_score']:>8.4f}")
    print(f"{res['seconds']:.1f}s")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(res, fh, indent=2)


if __name__ == "__main__":
    main()
