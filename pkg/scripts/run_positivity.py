#!/usr/bin/env python3
"""Positive-activity study on MNIST.

Five configurations: sigmoid and tanh hidden layers, each with and without
the positivity constraint, plus tanh with positivity and a bias that keeps
effective predictions non-negative. Reports the mean last-3-epoch test error
per configuration and the three comparisons the acceptance gate checks:
the constraint is free for sigmoid, costs tanh at least half a point, and
the bias buys that loss back.

Example:
    python scripts/run_positivity.py --data-dir data --out-dir runs/positivity
"""

import argparse
import sys

from biopc import dataio
from biopc.experiments import POSITIVITY_ROWS, TABLE_SEEDS, mean_error, run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", required=True)
    parser.add_argument("--out-dir", default="runs/positivity")
    parser.add_argument("--epochs", type=int, default=25)
    parser.add_argument("--seeds", type=int, nargs="+", default=list(TABLE_SEEDS))
    parser.add_argument("--tanh-bias", type=float, default=1.0,
                        help="bias for the tanh recovery run")
    args = parser.parse_args(argv)

    train_split = dataio.load_split(args.data_dir, "mnist", "train")
    test_split = dataio.load_split(args.data_dir, "mnist", "test")

    means = {}
    for name, overrides in POSITIVITY_ROWS.items():
        overrides = dict(overrides)
        if name == "tanh_pos_bias":
            overrides["bias"] = args.tanh_bias
        outcomes = run_experiment(name, overrides, "mnist", args.seeds,
                                  train_split=train_split, test_split=test_split,
                                  epochs=args.epochs, out_root=args.out_dir, log=print)
        means[name] = mean_error(outcomes)
        print(f"== {name}: mean last-3 test error {means[name]:.4f}")

    sigmoid_gap = abs(means["sigmoid_pos"] - means["sigmoid"])
    tanh_drop = means["tanh_pos"] - means["tanh"]
    tanh_recovery = abs(means["tanh_pos_bias"] - means["tanh"])

    print("\npositivity study summary")
    for name, value in means.items():
        print(f"  {name:<14} {value:.4f}")
    checks = [
        ("sigmoid unaffected (|gap| <= 0.005)", sigmoid_gap <= 0.005,
         f"gap {sigmoid_gap:.4f}"),
        ("tanh degraded without bias (drop >= 0.005)", tanh_drop >= 0.005,
         f"drop {tanh_drop:.4f}"),
        ("tanh recovered with bias (|gap| <= 0.005)", tanh_recovery <= 0.005,
         f"gap {tanh_recovery:.4f}"),
    ]
    for label, ok, detail in checks:
        print(f"  {'OK  ' if ok else 'MISS'} {label}: {detail}")
    return 0 if all(ok for _, ok, _ in checks) else 1


if __name__ == "__main__":
    sys.exit(main())
