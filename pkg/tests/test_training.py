import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turnout import network
from turnout.dataset import EncodedDataset, SplitIndices, encode, split
from turnout.network import Mlp, init
from turnout.synth import synthesize
from turnout.training import (
    NumericalError,
    TrainConfig,
    descend,
    evaluate,
    history_csv,
    train,
)


def scripted_run(val_curve, max_fail=6):
    """Replay the stopping rule over a fixed validation curve (oracle for the loop's bookkeeping)."""
    best, best_epoch, fails = math.inf, 0, 0
    for epoch, v in enumerate(val_curve, start=1):
        if v < best:
            best, best_epoch, fails = v, epoch, 0
        else:
            fails += 1
        if fails >= max_fail:
            return best_epoch, epoch
    return best_epoch, len(val_curve)


def test_scripted_nine_then_fifteen():
    curve = [1.0 - 0.1 * i for i in range(9)] + [0.5] * 20
    assert scripted_run(curve) == (9, 15)


def small_problem(seed=0, n=100, rule="trust"):
    enc = encode(synthesize(n, seed, rule, 0.05))
    return enc, split(len(enc), (0.7, 0.15, 0.15), seed)


def test_train_bookkeeping_matches_replay():
    enc, parts = small_problem()
    res = train(init(9, 10, 3, 0), enc, parts, TrainConfig(learning_rate=0.5))
    assert res.stop_reason == "validation_fail"
    assert (res.best_epoch, res.stop_epoch) == scripted_run([h.validation_mse for h in res.history])
    assert res.stop_epoch - res.best_epoch == 6
    assert [h.epoch for h in res.history] == list(range(1, res.stop_epoch + 1))
    vals = [h.validation_mse for h in res.history]
    assert res.best.validation_mse == min(vals)
    # strict improvement: the best epoch is the first epoch reaching the minimum
    assert vals.index(min(vals)) + 1 == res.best_epoch


def test_zero_gradient_fixed_point_stops_after_max_fail():
    x = np.random.default_rng(0).uniform(-1, 1, (8, 3))
    t = np.tile([1.0, 0.0, 0.0], (8, 1))
    data = EncodedDataset(x, t, 3)
    parts = SplitIndices(tuple(range(5)), (5, 6), (7,), 0)
    fixed = Mlp(np.zeros((2, 3)), np.zeros(2), np.zeros((3, 2)), [40.0, 0.0, 0.0])
    res = train(fixed, data, parts, TrainConfig(max_fail=6))
    assert (res.stop_reason, res.best_epoch, res.stop_epoch) == ("validation_fail", 1, 7)
    assert res.model == fixed


def test_max_epochs_cap():
    enc, parts = small_problem()
    res = train(init(9, 10, 3, 0), enc, parts, TrainConfig(max_epochs=1))
    assert len(res.history) == 1 and res.stop_reason == "max_epochs" and res.best_epoch == 1


def test_target_mse_stop():
    enc, parts = small_problem()
    res = train(init(9, 10, 3, 0), enc, parts, TrainConfig(learning_rate=0.5, target_mse=0.2, max_fail=1000))
    assert res.stop_reason == "target_mse"
    assert res.history[-1].train_mse <= 0.2
    assert all(h.train_mse > 0.2 for h in res.history[:-1])


def test_best_weights_restored():
    enc, parts = small_problem(3)
    res = train(init(9, 10, 3, 3), enc, parts, TrainConfig(learning_rate=0.5))
    mse, _ = evaluate(res.model, enc, parts.validation)
    assert mse == pytest.approx(res.best.validation_mse, rel=1e-12)
    assert res.final_model != res.model


def test_tiny_lr_single_row_monotone():
    data = EncodedDataset([[0.5], [0.1], [-0.3]], [[1.0], [0.0], [1.0]], 1)
    parts = SplitIndices((0,), (1,), (2,), 0)
    res = train(init(1, 1, 1, 4), data, parts, TrainConfig(learning_rate=1e-3, max_epochs=50, max_fail=10**6))
    tr = [h.train_mse for h in res.history]
    assert len(tr) == 50
    assert all(b <= a for a, b in zip(tr, tr[1:]))


def test_training_is_deterministic():
    enc, parts = small_problem(2)
    a = train(init(9, 10, 3, 2), enc, parts, TrainConfig())
    b = train(init(9, 10, 3, 2), enc, parts, TrainConfig())
    assert a.history == b.history and a.model == b.model and a.best_epoch == b.best_epoch


def test_backend_override(kern):
    enc, parts = small_problem(1)
    res = train(init(9, 10, 3, 1), enc, parts, TrainConfig(max_epochs=30), kernels=kern)
    ref = train(init(9, 10, 3, 1), enc, parts, TrainConfig(max_epochs=30))
    np.testing.assert_allclose(
        [h.validation_mse for h in res.history], [h.validation_mse for h in ref.history], rtol=1e-10
    )


def test_errors():
    enc, parts = small_problem()
    with pytest.raises(ValueError):
        train(init(8, 10, 3, 0), enc, parts, TrainConfig())
    with pytest.raises(ValueError):
        train(init(9, 10, 3, 0), enc, SplitIndices(parts.train, (), parts.test, 0), TrainConfig())
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(max_fail=0)
    bad = np.array(enc.inputs)
    bad[parts.train[0], 0] = np.nan
    with pytest.raises(NumericalError, match="epoch 1"):
        train(init(9, 10, 3, 0), EncodedDataset(bad, enc.targets, 3), parts, TrainConfig())


def test_evaluate_examples():
    x = np.array([[-1.0], [1.0]])
    data = EncodedDataset(x, [[1.0, 0.0], [0.0, 1.0]], 2)
    perfect = Mlp([[20.0]], [0.0], [[-20.0], [20.0]], [0.0, 0.0])
    assert evaluate(perfect, data, [0, 1])[1] == 1.0
    assert evaluate(perfect, data, [0])[1] in (0.0, 1.0)
    with pytest.raises(ValueError):
        evaluate(perfect, data, [])


def test_evaluate_91_of_100():
    truths = np.arange(100) % 3
    preds = truths.copy()
    preds[:9] = (preds[:9] + 1) % 3
    # the input is the intended prediction, one-hot; an identity-like net passes it through
    data = EncodedDataset(np.eye(3)[preds], np.eye(3)[truths], 3)
    passthrough = Mlp(3 * np.eye(3), np.zeros(3), 3 * np.eye(3), np.zeros(3))
    assert evaluate(passthrough, data, range(100))[1] == 0.91


def test_descend_reaches_target():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    t = np.array([[0.0], [1.0], [1.0], [0.0]])
    model, losses = descend(init(2, 2, 1, 0), x, t, 0.5, 5000, target_mse=0.01)
    assert losses[-1] <= 0.01 and len(losses) < 5000
    assert network.batch_mse(model, x, t) == losses[-1]


def test_history_csv():
    enc, parts = small_problem()
    res = train(init(9, 10, 3, 0), enc, parts, TrainConfig(max_epochs=3))
    lines = history_csv(res.history).splitlines()
    assert lines[0] == "epoch,train_mse,validation_mse,test_mse"
    assert len(lines) == 4
    assert float(lines[2].split(",")[2]) == res.history[1].validation_mse


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.05, 2.0), st.integers(1, 8))
def test_stop_arithmetic_property(seed, lr, max_fail):
    enc, parts = small_problem(seed % 50, n=60)
    res = train(init(9, 6, 3, seed), enc, parts, TrainConfig(learning_rate=lr, max_fail=max_fail, max_epochs=400))
    assert len(res.history) == res.stop_epoch
    if res.stop_reason == "validation_fail":
        assert res.stop_epoch - res.best_epoch == max_fail
    assert res.best.validation_mse == min(h.validation_mse for h in res.history)
