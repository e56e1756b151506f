"""Training loop, evaluation and finite-difference gradient checking.

One weight update per minibatch: the state is initialized by a forward
sweep, the output level is clamped to the target, the hidden activities
relax for a fixed number of steps, and the batch-averaged local directions
go through per-matrix Adam optimizers (plus the Kolen-Pollack decay pair
when that feedback scheme is selected). Evaluation always uses the pure
forward sweep.

The metrics CSV has the schema `epoch,split,error,objective,seconds` with
one train row and one test row per epoch. The train row's objective is the
epoch mean of the relaxed energy/cost at weight-update time; the test row's
objective is the output-level mismatch of the configured encoding family
under the forward sweep. `seconds` is wall time and is the only column that
is not reproducible bit-for-bit across same-seed runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import dataio
from . import encodings as enc
from .baseline import MLP, init_mlp
from .checkpoint import save_checkpoint
from .config import NETWORK_DIMS, TrainConfig
from .linalg import ActivationKind
from .network import KolenPollack, PCNetwork, Transpose, init_network, kp_step
from .optim import AdamState, adam_step

METRICS_HEADER = "epoch,split,error,objective,seconds"


@dataclass
class EpochMetrics:
    epoch: int
    split: str
    error: float
    objective: float
    seconds: float

    def csv_row(self) -> str:
        return f"{self.epoch},{self.split},{self.error!r},{self.objective!r},{self.seconds!r}"


@dataclass
class TrainResult:
    metrics: list
    metrics_path: Optional[Path]
    checkpoint_path: Optional[Path]
    model: object


def build_model(cfg: TrainConfig):
    if cfg.model == "bp":
        return init_mlp(NETWORK_DIMS, bias=cfg.bias,
                        hidden_activation=cfg.hidden_activation_value(),
                        seed=cfg.seed)
    return init_network(NETWORK_DIMS,
                        encoding=cfg.encoding_value(),
                        feedback=cfg.feedback_value(),
                        hidden_activation=cfg.hidden_activation_value(),
                        bias=cfg.bias,
                        positive_activities=cfg.positive_activities,
                        seed=cfg.seed)


def classification_error(model, split: dataio.DatasetSplit, chunk: int = 4096) -> float:
    """Fraction of samples whose argmax output misses the label."""
    wrong = 0
    for start in range(0, split.n_samples, chunk):
        x = split.images[:, start:start + chunk]
        labels = split.labels[start:start + chunk]
        wrong += int(np.sum(np.argmax(model.predict(x), axis=0) != labels))
    return wrong / split.n_samples


def output_objective(model, split: dataio.DatasetSplit, chunk: int = 4096) -> float:
    """Output-level mismatch between forward-sweep predictions and targets,
    in the model's objective family, mean per sample."""
    division = isinstance(model, PCNetwork) and isinstance(model.encoding, enc.Division)
    total = 0.0
    for start in range(0, split.n_samples, chunk):
        x = split.images[:, start:start + chunk]
        y = dataio.one_hot(split.labels[start:start + chunk])
        out = model.predict(x)
        n = y.shape[1]
        if division:
            eps = model.encoding.epsilon
            total += enc.division_cost(enc.division_error(y, out, eps)) * n
        else:
            total += enc.energy([y - out]) * n
    return total / split.n_samples


def evaluate(model, split: dataio.DatasetSplit):
    """Returns (classification error, output objective) for a split."""
    return classification_error(model, split), output_objective(model, split)


def _train_batch_pc(net: PCNetwork, x, y, cfg: TrainConfig, adams) -> float:
    state = net.init_forward(x)
    net.clamp_output(state, y)
    net.relax(state, cfg.n_updates, cfg.beta)
    net.compute_errors(state)
    objective = net.objective(state)
    directions = net.weight_update_direction(state)
    kp = isinstance(net.feedback, KolenPollack)
    for l, direction in enumerate(directions):
        increment = adam_step(adams[l], direction)
        if kp:
            net.weights[l], net.feedback_weights[l] = kp_step(
                net.weights[l], net.feedback_weights[l], increment, net.feedback.gamma)
        else:
            net.weights[l] = net.weights[l] + increment
    return objective


def _train_batch_bp(mlp: MLP, x, y, adams) -> float:
    objective = mlp.loss(x, y)
    grads = mlp.backward(x, y)
    for l, grad in enumerate(grads):
        mlp.weights[l] = mlp.weights[l] + adam_step(adams[l], -grad)
    return objective


def train(cfg: TrainConfig, train_split: Optional[dataio.DatasetSplit] = None,
          test_split: Optional[dataio.DatasetSplit] = None,
          write_outputs: bool = True, log=None) -> TrainResult:
    """Run the full training schedule; deterministic for a fixed config.

    Dataset splits may be passed in directly (synthetic data, tests); when
    omitted they are loaded from cfg.data_dir. With write_outputs the metrics
    CSV and final checkpoint land in cfg.out_dir.
    """
    cfg = cfg.finalize()
    if train_split is None:
        train_split = dataio.load_split(cfg.data_dir, cfg.dataset, "train")
    if test_split is None:
        test_split = dataio.load_split(cfg.data_dir, cfg.dataset, "test")
    if train_split.images.shape[0] != NETWORK_DIMS[0]:
        raise dataio.IdxError(
            f"train images have {train_split.images.shape[0]} features, "
            f"the network expects {NETWORK_DIMS[0]}"
        )

    model = build_model(cfg)
    adams = [AdamState.for_shape(w.shape, lr=cfg.lr) for w in model.weights]
    plan = dataio.BatchPlan(cfg.batch_size, cfg.seed)
    is_pc = isinstance(model, PCNetwork)

    metrics = []
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        objective_sum = 0.0
        for idx in plan.batches(epoch, train_split.n_samples):
            x = train_split.images[:, idx]
            y = dataio.one_hot(train_split.labels[idx])
            if is_pc:
                batch_objective = _train_batch_pc(model, x, y, cfg, adams)
            else:
                batch_objective = _train_batch_bp(model, x, y, adams)
            objective_sum += batch_objective * idx.shape[0]
        train_seconds = time.perf_counter() - t0

        train_error = classification_error(model, train_split)
        metrics.append(EpochMetrics(epoch, "train", train_error,
                                    objective_sum / train_split.n_samples, train_seconds))
        t1 = time.perf_counter()
        test_error, test_objective = evaluate(model, test_split)
        metrics.append(EpochMetrics(epoch, "test", test_error, test_objective,
                                    time.perf_counter() - t1))
        if log is not None:
            log(f"epoch {epoch:3d}  train_err {train_error:.4f}  "
                f"test_err {test_error:.4f}  objective {metrics[-2].objective:.5f}")

    metrics_path = checkpoint_path = None
    if write_outputs:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = out_dir / "metrics.csv"
        write_metrics(metrics_path, metrics)
        checkpoint_path = out_dir / "model.pcck"
        save_checkpoint(checkpoint_path, model, adams)
    return TrainResult(metrics=metrics, metrics_path=metrics_path,
                       checkpoint_path=checkpoint_path, model=model)


def write_metrics(path, metrics) -> None:
    lines = [METRICS_HEADER] + [m.csv_row() for m in metrics]
    Path(path).write_text("\n".join(lines) + "\n")


# -- gradient checking --------------------------------------------------------


@dataclass
class LayerCheck:
    quantity: str  # "weights" or "activities"
    layer: int
    max_rel_err: float
    gated: bool  # False for the approximate-feedback activity path

    def describe(self) -> str:
        note = "" if self.gated else "  [approximate feedback (expected)]"
        return f"{self.quantity}[{self.layer}]  max rel err {self.max_rel_err:.3e}{note}"


@dataclass
class GradcheckReport:
    checks: list
    threshold: float

    @property
    def passed(self) -> bool:
        return all(c.max_rel_err <= self.threshold for c in self.checks if c.gated)

    def max_gated_error(self) -> float:
        return max((c.max_rel_err for c in self.checks if c.gated), default=0.0)


def _state_objective(net: PCNetwork, state) -> float:
    net.compute_errors(state)
    return net.objective(state)


def _rebuild_predictions(net: PCNetwork, state) -> None:
    net._refresh_predictions(state, from_level=1)


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(analytic))), float(np.max(np.abs(numeric))), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def run_gradcheck(encoding: enc.ErrorEncoding = enc.Subtractive(),
                  feedback=Transpose(), *, hidden_activation=ActivationKind.SIGMOID,
                  dims=(5, 4, 3), batch: int = 2, seed: int = 0,
                  n_relax: int = 3, beta: float = 0.05, h: float = 1e-6,
                  threshold: float = 1e-4) -> GradcheckReport:
    """Compare analytic update directions against central finite differences
    of the configured objective on a small network.

    Activity directions are per-sample, so they are checked against the
    batch-size-scaled derivative of the batch-mean objective. With separate
    feedback matrices the bottom-up activity term is not the gradient by
    construction; those checks are reported but never gate the result.
    Errors are max absolute deviation over a layer, relative to the largest
    gradient magnitude in that layer.
    """
    division = isinstance(encoding, enc.Division)
    net = init_network(dims, encoding=encoding, feedback=feedback,
                       hidden_activation=hidden_activation,
                       bias=0.1 if division else 0.0,
                       positive_activities=division, seed=seed)
    rng = np.random.default_rng([seed, 17])
    x = rng.uniform(0.0, 1.0, size=(dims[0], batch))
    y = dataio.one_hot(rng.integers(0, dims[-1], size=batch), classes=dims[-1])

    state = net.init_forward(x)
    net.clamp_output(state, y)
    net.relax(state, n_relax, beta)
    net.compute_errors(state)

    weight_dirs = net.weight_update_direction(state)
    activity_dirs = net.activity_directions(state)

    checks = []
    transpose_feedback = isinstance(feedback, Transpose)

    for l in range(1, net.n_levels):
        analytic = activity_dirs[l]
        numeric = np.empty_like(analytic)
        base = state.a[l]
        for i in range(base.shape[0]):
            for j in range(base.shape[1]):
                orig = base[i, j]
                base[i, j] = orig + h
                _rebuild_predictions(net, state)
                up = _state_objective(net, state)
                base[i, j] = orig - h
                _rebuild_predictions(net, state)
                down = _state_objective(net, state)
                base[i, j] = orig
                # objective is mean over batch; directions are per sample
                numeric[i, j] = -batch * (up - down) / (2.0 * h)
        _rebuild_predictions(net, state)
        net.compute_errors(state)
        checks.append(LayerCheck("activities", l, _relative_error(analytic, numeric),
                                 gated=transpose_feedback))

    for l in range(net.n_levels):
        analytic = weight_dirs[l]
        numeric = np.empty_like(analytic)
        w = net.weights[l]
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                orig = w[i, j]
                w[i, j] = orig + h
                _rebuild_predictions(net, state)
                up = _state_objective(net, state)
                w[i, j] = orig - h
                _rebuild_predictions(net, state)
                down = _state_objective(net, state)
                w[i, j] = orig
                numeric[i, j] = -(up - down) / (2.0 * h)
        _rebuild_predictions(net, state)
        net.compute_errors(state)
        checks.append(LayerCheck("weights", l, _relative_error(analytic, numeric), gated=True))

    return GradcheckReport(checks=checks, threshold=threshold)
