"""Full-batch gradient descent with validation-based early stopping."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend, network
from .dataset import EncodedDataset, SplitIndices
from .network import Mlp

STOP_REASONS = ("validation_fail", "max_epochs", "target_mse")


class NumericalError(ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, what: str):
        self.epoch = epoch
        super().__init__(f"non-finite {what} at epoch {epoch}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    max_epochs: int = 1000
    max_fail: int = 6
    seed: int = 0
    target_mse: float = 0.0  # 0 disables the goal check

    def __post_init__(self):
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs!r}")
        if self.max_fail < 1:
            raise ValueError(f"max_fail must be >= 1, got {self.max_fail!r}")
        if not self.target_mse >= 0:
            raise ValueError(f"target_mse must be >= 0, got {self.target_mse!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_mse: float
    validation_mse: float
    test_mse: float


@dataclass(frozen=True)
class TrainResult:
    model: Mlp
    history: tuple[EpochRecord, ...]
    best_epoch: int
    stop_epoch: int
    stop_reason: str
    final_model: Mlp = field(repr=False, default=None)

    @property
    def best(self) -> EpochRecord:
        return self.history[self.best_epoch - 1]


def _check_indices(indices, n, what):
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError(f"{what} indices out of range for {n} rows")
    return idx


def _finite(arrays) -> bool:
    return all(np.isfinite(a).all() for a in arrays)


def train(
    initial: Mlp, data: EncodedDataset, split: SplitIndices, config: TrainConfig, kernels=None
) -> TrainResult:
    """Train ``initial`` on ``split.train``; stop on validation stalls, epoch cap or MSE goal.

    An epoch is one gradient step followed by MSE on all three subsets. The
    validation MSE must strictly drop below the best seen to count as an
    improvement; ``max_fail`` consecutive non-improvements end training and
    the best epoch's weights are returned. Test MSE is recorded only.
    ``kernels`` overrides the backend module (see :mod:`turnout._backend`).
    """
    kern = kernels or _backend.kernels
    n = len(data)
    if data.inputs.shape[1] != initial.n_inputs or data.class_count != initial.n_classes:
        raise ValueError(
            f"data has {data.inputs.shape[1]} inputs / {data.class_count} classes, "
            f"network expects {initial.n_inputs} / {initial.n_classes}"
        )
    tr = _check_indices(split.train, n, "train")
    va = _check_indices(split.validation, n, "validation")
    te = _check_indices(split.test, n, "test")
    if tr.size == 0 or va.size == 0:
        raise ValueError("training and validation subsets must be non-empty")
    x_tr, t_tr = data.inputs[tr], data.targets[tr]
    x_va, t_va = data.inputs[va], data.targets[va]
    x_te, t_te = data.inputs[te], data.targets[te]

    params = [p.copy() for p in initial.params()]
    lr = config.learning_rate
    best_params, best_val, best_epoch = None, math.inf, 0
    fails = 0
    history = []
    reason = "max_epochs"
    for epoch in range(1, config.max_epochs + 1):
        loss, *grads = kern.loss_grad(*params, x_tr, t_tr)
        if not math.isfinite(loss) or not _finite(grads):
            raise NumericalError(epoch, "training loss")
        for p, g in zip(params, grads):
            p -= lr * g
        rec = EpochRecord(
            epoch,
            float(kern.batch_mse(*params, x_tr, t_tr)),
            float(kern.batch_mse(*params, x_va, t_va)),
            float(kern.batch_mse(*params, x_te, t_te)) if te.size else math.nan,
        )
        if not (math.isfinite(rec.train_mse) and math.isfinite(rec.validation_mse)):
            raise NumericalError(epoch, "mse")
        history.append(rec)
        if rec.validation_mse < best_val:
            best_params = [p.copy() for p in params]
            best_val, best_epoch = rec.validation_mse, epoch
            fails = 0
        else:
            fails += 1
        if config.target_mse > 0 and rec.train_mse <= config.target_mse:
            reason = "target_mse"
            break
        if fails >= config.max_fail:
            reason = "validation_fail"
            break
    return TrainResult(Mlp(*best_params), tuple(history), best_epoch, len(history), reason, Mlp(*params))


def descend(initial: Mlp, inputs, targets, learning_rate: float, max_epochs: int, target_mse: float = 0.0,
            kernels=None):
    """Plain full-batch descent without a validation set.

    Returns ``(model, losses)`` where ``losses[i]`` is the MSE after step i+1;
    stops early once the MSE is at or below ``target_mse`` (when positive).
    """
    kern = kernels or _backend.kernels
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    t = np.ascontiguousarray(targets, dtype=np.float64)
    network.loss_and_gradient(initial, x, t)  # shape checks
    params = [p.copy() for p in initial.params()]
    losses = []
    for epoch in range(1, max_epochs + 1):
        loss, *grads = kern.loss_grad(*params, x, t)
        if not math.isfinite(loss):
            raise NumericalError(epoch, "training loss")
        for p, g in zip(params, grads):
            p -= learning_rate * g
        losses.append(float(kern.batch_mse(*params, x, t)))
        if target_mse > 0 and losses[-1] <= target_mse:
            break
    return Mlp(*params), losses


def evaluate(model: Mlp, data: EncodedDataset, indices) -> tuple[float, float]:
    """MSE and classification accuracy of ``model`` on the given rows."""
    idx = _check_indices(indices, len(data), "evaluation")
    if idx.size == 0:
        raise ValueError("cannot evaluate on an empty index set")
    x, t = data.inputs[idx], data.targets[idx]
    out = network.outputs(model, x)
    acc = float(np.mean(np.argmax(out, axis=1) == np.argmax(t, axis=1)))
    return network.mse(out, t), acc


def history_csv(history) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "train_mse", "validation_mse", "test_mse"])
    for rec in history:
        writer.writerow([rec.epoch, repr(rec.train_mse), repr(rec.validation_mse), repr(rec.test_mse)])
    return buf.getvalue()
