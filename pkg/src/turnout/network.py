"""Two-layer feed-forward network with tan-sigmoid hidden and output units.

Batch math is delegated to the kernel module picked in :mod:`turnout._backend`
(compiled when available, numpy otherwise).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from typing import Any, Mapping

import numpy as np

from ._backend import kernels

MODEL_FORMAT = "turnout-mlp/1"


def tansig(x):
    """Tan-sigmoid ``2 / (1 + exp(-2x)) - 1``, evaluated as the hyperbolic tangent.

    The two forms are algebraically identical; tanh avoids the cancellation
    the explicit form suffers near zero. Accepts scalars or arrays.
    """
    if np.ndim(x) == 0:
        return math.tanh(float(x))
    return np.tanh(np.asarray(x, dtype=np.float64))


def tansig_deriv_from_act(a):
    """Derivative of tansig expressed through its output: ``1 - a**2``."""
    return 1.0 - np.square(a)


def _frozen(arr, ndim: int, name: str) -> np.ndarray:
    out = np.array(arr, dtype=np.float64, order="C", copy=True)
    if out.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Mlp:
    """Weights of an inputs -> hidden -> classes network. Arrays are read-only copies."""

    w_hidden: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            ndim = 2 if f.name.startswith("w_") else 1
            object.__setattr__(self, f.name, _frozen(getattr(self, f.name), ndim, f.name))
        h, m = self.w_hidden.shape
        k, h2 = self.w_out.shape
        if m < 1 or h < 1 or k < 1:
            raise ValueError("network sizes must be >= 1")
        if h2 != h or self.b_hidden.shape != (h,) or self.b_out.shape != (k,):
            raise ValueError(
                "inconsistent shapes: "
                f"w_hidden {self.w_hidden.shape}, b_hidden {self.b_hidden.shape}, "
                f"w_out {self.w_out.shape}, b_out {self.b_out.shape}"
            )

    @property
    def n_inputs(self) -> int:
        return self.w_hidden.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w_hidden.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w_out.shape[0]

    def params(self):
        return self.w_hidden, self.b_hidden, self.w_out, self.b_out

    def __eq__(self, other):
        if not isinstance(other, Mlp):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.params(), other.params()))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Gradient:
    """Partial derivatives of the batch MSE, laid out like :class:`Mlp`."""

    w_hidden: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    def params(self):
        return self.w_hidden, self.b_hidden, self.w_out, self.b_out

    def flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])


@dataclass(frozen=True)
class ForwardTrace:
    hidden_pre: np.ndarray
    hidden_act: np.ndarray
    out_pre: np.ndarray
    out_act: np.ndarray


def init(n_inputs: int, n_hidden: int, n_classes: int, seed: int) -> Mlp:
    """Uniform ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` weights per layer, zero biases."""
    for name, size in (("n_inputs", n_inputs), ("n_hidden", n_hidden), ("n_classes", n_classes)):
        if int(size) != size or size < 1:
            raise ValueError(f"{name} must be a positive integer, got {size!r}")
    rng = np.random.default_rng(seed)
    lim_h = 1.0 / math.sqrt(n_inputs)
    lim_o = 1.0 / math.sqrt(n_hidden)
    w_hidden = rng.uniform(-lim_h, lim_h, size=(n_hidden, n_inputs))
    w_out = rng.uniform(-lim_o, lim_o, size=(n_classes, n_hidden))
    return Mlp(w_hidden, np.zeros(n_hidden), w_out, np.zeros(n_classes))


def _as_matrix(x, width: int, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"{what} must have {width} columns, got shape {np.shape(x)}")
    return arr


def forward(mlp: Mlp, x) -> ForwardTrace:
    """Single-sample forward pass keeping every intermediate."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (mlp.n_inputs,):
        raise ValueError(f"input must have length {mlp.n_inputs}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite entries")
    hidden_pre = mlp.w_hidden @ x + mlp.b_hidden
    hidden_act = np.tanh(hidden_pre)
    out_pre = mlp.w_out @ hidden_act + mlp.b_out
    out_act = np.tanh(out_pre)
    return ForwardTrace(hidden_pre, hidden_act, out_pre, out_act)


def outputs(mlp: Mlp, inputs) -> np.ndarray:
    """Output activations for every row of ``inputs``."""
    x = _as_matrix(inputs, mlp.n_inputs, "inputs")
    _, out = kernels.forward_batch(*mlp.params(), x)
    return np.asarray(out)


def mse(outs, targets) -> float:
    """Mean over all entries of the squared difference."""
    outs = np.asarray(outs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outs.shape != targets.shape:
        raise ValueError(f"shape mismatch: outputs {outs.shape} vs targets {targets.shape}")
    if outs.size == 0:
        raise ValueError("mse of an empty batch is undefined")
    return float(np.mean((outs - targets) ** 2))


def batch_mse(mlp: Mlp, inputs, targets) -> float:
    x = _as_matrix(inputs, mlp.n_inputs, "inputs")
    t = _as_matrix(targets, mlp.n_classes, "targets")
    if x.shape[0] != t.shape[0] or x.shape[0] == 0:
        raise ValueError(f"need equal, non-zero row counts; got {x.shape[0]} and {t.shape[0]}")
    return float(kernels.batch_mse(*mlp.params(), x, t))


def loss_and_gradient(mlp: Mlp, inputs, targets) -> tuple[float, Gradient]:
    x = _as_matrix(inputs, mlp.n_inputs, "inputs")
    t = _as_matrix(targets, mlp.n_classes, "targets")
    if x.shape[0] != t.shape[0] or x.shape[0] == 0:
        raise ValueError(f"need equal, non-zero row counts; got {x.shape[0]} and {t.shape[0]}")
    loss, gw1, gb1, gw2, gb2 = kernels.loss_grad(*mlp.params(), x, t)
    return float(loss), Gradient(np.asarray(gw1), np.asarray(gb1), np.asarray(gw2), np.asarray(gb2))


def backprop(mlp: Mlp, inputs, targets) -> Gradient:
    """Exact gradient of the batch MSE with respect to every weight and bias.

    The loss is averaged over rows and output units, so duplicating the batch
    leaves the gradient unchanged.
    """
    return loss_and_gradient(mlp, inputs, targets)[1]


def step(mlp: Mlp, grad: Gradient, learning_rate: float) -> Mlp:
    return Mlp(*(p - learning_rate * g for p, g in zip(mlp.params(), grad.params())))


def predict(mlp: Mlp, x) -> int:
    """Index of the largest output activation; ties go to the lowest index."""
    return int(np.argmax(forward(mlp, x).out_act))


def predict_batch(mlp: Mlp, inputs) -> np.ndarray:
    return np.argmax(outputs(mlp, inputs), axis=1)


# -- serialization ---------------------------------------------------------


def _hex(arr: np.ndarray):
    return [_hex(a) for a in arr] if arr.ndim > 1 else [float(v).hex() for v in arr]


def _unhex(data, name: str) -> np.ndarray:
    try:
        return np.array(
            [[float.fromhex(v) for v in row] for row in data]
            if data and isinstance(data[0], list)
            else [float.fromhex(v) for v in data],
            dtype=np.float64,
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"model field {name!r}: {exc}") from None


def model_to_dict(mlp: Mlp, provenance: Mapping[str, Any] | None = None) -> dict:
    return {
        "format": MODEL_FORMAT,
        "shapes": {"n_inputs": mlp.n_inputs, "n_hidden": mlp.n_hidden, "n_classes": mlp.n_classes},
        "provenance": dict(provenance or {}),
        "w_hidden": _hex(mlp.w_hidden),
        "b_hidden": _hex(mlp.b_hidden),
        "w_out": _hex(mlp.w_out),
        "b_out": _hex(mlp.b_out),
    }


def model_from_dict(doc: Mapping[str, Any]) -> Mlp:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    try:
        mlp = Mlp(*(_unhex(doc[name], name) for name in ("w_hidden", "b_hidden", "w_out", "b_out")))
    except KeyError as exc:
        raise ValueError(f"model document missing field {exc}") from None
    shapes = doc.get("shapes", {})
    expected = {"n_inputs": mlp.n_inputs, "n_hidden": mlp.n_hidden, "n_classes": mlp.n_classes}
    if shapes and dict(shapes) != expected:
        raise ValueError(f"declared shapes {dict(shapes)} disagree with weight arrays {expected}")
    return mlp


def dumps_model(mlp: Mlp, provenance: Mapping[str, Any] | None = None) -> str:
    return json.dumps(model_to_dict(mlp, provenance), indent=2, sort_keys=True) + "\n"


def loads_model(text: str) -> Mlp:
    return model_from_dict(json.loads(text))
