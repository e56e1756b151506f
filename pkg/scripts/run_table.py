#!/usr/bin/env python3
"""Reproduce the six-model comparison table on MNIST or Fashion-MNIST.

Trains each configuration (backprop baseline, standard PC, Kolen-Pollack PC,
random-feedback PC, and the two division-encoding variants) across seeds and
reports the mean test error of the last three epochs, next to the reference
values the acceptance gate checks against.

Example:
    python scripts/run_table.py --data-dir data --dataset mnist --out-dir runs/table
    python scripts/run_table.py --data-dir data --dataset mnist --rows pc kp_pc --seeds 1

Runs are independent; to parallelize, launch one process per row with --rows.
"""

import argparse
import sys
import time

from biopc import dataio
from biopc.experiments import TABLE_ROWS, TABLE_SEEDS, mean_error, run_experiment


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", required=True)
    parser.add_argument("--dataset", choices=["mnist", "fashion"], default="mnist")
    parser.add_argument("--out-dir", default="runs/table")
    parser.add_argument("--epochs", type=int, default=25)
    parser.add_argument("--seeds", type=int, nargs="+", default=list(TABLE_SEEDS))
    parser.add_argument("--rows", nargs="+", choices=list(TABLE_ROWS),
                        default=list(TABLE_ROWS))
    parser.add_argument("--tolerance", type=float, default=None,
                        help="gate width (default: 0.006 mnist, 0.012 fashion)")
    args = parser.parse_args(argv)

    tolerance = args.tolerance
    if tolerance is None:
        tolerance = 0.006 if args.dataset == "mnist" else 0.012

    train_split = dataio.load_split(args.data_dir, args.dataset, "train")
    test_split = dataio.load_split(args.data_dir, args.dataset, "test")
    out_root = f"{args.out_dir}/{args.dataset}"

    summary = []
    for name in args.rows:
        overrides, ref_mnist, ref_fashion = TABLE_ROWS[name]
        reference = ref_mnist if args.dataset == "mnist" else ref_fashion
        t0 = time.time()
        outcomes = run_experiment(name, overrides, args.dataset, args.seeds,
                                  train_split=train_split, test_split=test_split,
                                  epochs=args.epochs, out_root=out_root, log=print)
        mean = mean_error(outcomes)
        ok = mean <= reference + tolerance
        summary.append((name, mean, reference, ok))
        print(f"== {name}: mean last-3 test error {mean:.4f} "
              f"(reference {reference:.3f}, gate <= {reference + tolerance:.4f}) "
              f"{'OK' if ok else 'MISS'}  [{time.time() - t0:.0f}s]")

    print(f"\n{args.dataset} summary ({len(args.seeds)} seed(s), {args.epochs} epochs)")
    print(f"{'model':<14} {'error':>8} {'reference':>10} {'gate':>6}")
    for name, mean, reference, ok in summary:
        print(f"{name:<14} {mean:>8.4f} {reference:>10.3f} {'OK' if ok else 'MISS':>6}")
    return 0 if all(ok for *_, ok in summary) else 1


if __name__ == "__main__":
    sys.exit(main())
