"""Command-line front end: train, eval and gradcheck.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 gradient
check failure.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import dataio
from . import encodings as enc
from .checkpoint import CheckpointError, load_checkpoint
from .config import ConfigError, TrainConfig, merge_config, parse_bool, parse_config_file
from .linalg import ActivationKind, ShapeMismatchError
from .network import KolenPollack, RandomFixed, Transpose
from .training import evaluate, run_gradcheck, train

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_GRADCHECK = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route that through the
    # config-error path instead so exit codes stay meaningful.
    def error(self, message):
        raise ConfigError(message)


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="config file of 'key = value' lines")
    p.add_argument("--dataset", choices=["mnist", "fashion"], default=None)
    p.add_argument("--data-dir", dest="data_dir", default=None)
    p.add_argument("--model", choices=["pc", "bp"], default=None)
    p.add_argument("--feedback", choices=["transpose", "random", "kp"], default=None)
    p.add_argument("--encoding", choices=["subtractive", "threshold", "division"], default=None)
    p.add_argument("--hidden-activation", dest="hidden_activation",
                   choices=["sigmoid", "tanh"], default=None)
    p.add_argument("--positive-activities", dest="positive_activities",
                   type=parse_bool, metavar="BOOL", default=None)
    p.add_argument("--bias", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--beta", type=float, default=None, help="inference rate")
    p.add_argument("--n-updates", dest="n_updates", type=int, default=None,
                   help="activity updates per minibatch")
    p.add_argument("--gamma", type=float, default=None, help="Kolen-Pollack decay")
    p.add_argument("--epsilon", type=float, default=None, help="division-encoding constant")
    p.add_argument("--e-min", dest="e_min", type=float, default=None,
                   help="threshold-encoding floor")
    p.add_argument("--e-max", dest="e_max", type=float, default=None,
                   help="threshold-encoding span")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)


_CONFIG_FIELDS = [
    "dataset", "data_dir", "model", "feedback", "encoding", "hidden_activation",
    "positive_activities", "bias", "epochs", "batch_size", "lr", "beta",
    "n_updates", "gamma", "epsilon", "e_min", "e_max", "seed", "out_dir",
]


def _config_from_args(args) -> TrainConfig:
    file_entries = parse_config_file(args.config) if args.config else None
    flag_entries = {f: getattr(args, f) for f in _CONFIG_FIELDS}
    return merge_config(file_entries, flag_entries)


def _describe_config(cfg: TrainConfig) -> str:
    bits = [f"dataset={cfg.dataset}", f"model={cfg.model}"]
    if cfg.model == "pc":
        bits += [f"feedback={cfg.feedback}", f"encoding={cfg.encoding}",
                 f"beta={cfg.beta}", f"n_updates={cfg.n_updates}"]
    bits += [f"hidden={cfg.hidden_activation}",
             f"positive_activities={cfg.positive_activities}", f"bias={cfg.bias}",
             f"epochs={cfg.epochs}", f"batch_size={cfg.batch_size}",
             f"lr={cfg.lr}", f"seed={cfg.seed}"]
    return "  ".join(bits)


def _cmd_train(args) -> int:
    cfg = _config_from_args(args).finalize()
    print(_describe_config(cfg))
    t0 = time.perf_counter()
    result = train(cfg, log=print)
    final = result.metrics[-1]
    print(f"done in {time.perf_counter() - t0:.1f}s  "
          f"final test error {final.error:.4f}")
    print(f"metrics: {result.metrics_path}")
    print(f"checkpoint: {result.checkpoint_path}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    split = dataio.load_split(args.data_dir, args.dataset, args.split)
    error, objective = evaluate(model, split)
    print(f"split={args.split} samples={split.n_samples} "
          f"error={error!r} objective={objective!r}")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    encoding = {
        "subtractive": enc.Subtractive(),
        "threshold": enc.SubtractiveThreshold(),
        "division": enc.Division(),
    }[args.encoding]
    feedback = {
        "transpose": Transpose(),
        "random": RandomFixed(),
        "kp": KolenPollack(),
    }[args.feedback]
    report = run_gradcheck(encoding, feedback,
                           hidden_activation=ActivationKind(args.hidden_activation),
                           seed=args.seed)
    print(f"gradcheck  encoding={args.encoding} feedback={args.feedback} "
          f"hidden={args.hidden_activation} dims=[5,4,3] batch=2")
    for check in report.checks:
        print("  " + check.describe())
    if report.passed:
        print(f"PASS  max gated rel err {report.max_gated_error():.3e} <= {report.threshold:g}")
        return EXIT_OK
    print(f"FAIL  max gated rel err {report.max_gated_error():.3e} > {report.threshold:g}")
    return EXIT_GRADCHECK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biopc",
                     description="Train and probe predictive-coding networks "
                                 "under biological constraints.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write metrics + checkpoint")
    _add_train_flags(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--dataset", choices=["mnist", "fashion"], default="mnist")
    p_eval.add_argument("--data-dir", dest="data_dir", default="data")
    p_eval.add_argument("--split", choices=["train", "test"], default="test")
    p_eval.set_defaults(func=_cmd_eval)

    p_grad = sub.add_parser("gradcheck",
                            help="compare update rules against finite differences")
    p_grad.add_argument("--encoding", choices=["subtractive", "threshold", "division"],
                        default="subtractive")
    p_grad.add_argument("--feedback", choices=["transpose", "random", "kp"],
                        default="transpose")
    p_grad.add_argument("--hidden-activation", dest="hidden_activation",
                        choices=["sigmoid", "tanh"], default="sigmoid")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (dataio.IdxError, CheckpointError, ShapeMismatchError, FileNotFoundError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
