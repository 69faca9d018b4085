"""Pure numpy kernels for the two-layer tan-sigmoid network.

All arrays are C-contiguous float64. Weight layout: ``w1`` is
(hidden, inputs), ``w2`` is (classes, hidden); rows of ``x`` and ``t`` are
samples.
"""
import numpy as np


def forward_batch(w1, b1, w2, b2, x):
    hidden = np.tanh(x @ w1.T + b1)
    out = np.tanh(hidden @ w2.T + b2)
    return hidden, out


def batch_mse(w1, b1, w2, b2, x, t):
    _, out = forward_batch(w1, b1, w2, b2, x)
    return float(np.mean((out - t) ** 2))


def loss_grad(w1, b1, w2, b2, x, t):
    """Return ``(mse, gw1, gb1, gw2, gb2)`` for the mean squared error over the batch."""
    hidden, out = forward_batch(w1, b1, w2, b2, x)
    resid = out - t
    loss = float(np.mean(resid**2))
    d_out = (2.0 / resid.size) * resid * (1.0 - out * out)
    gw2 = d_out.T @ hidden
    gb2 = d_out.sum(axis=0)
    d_hidden = (d_out @ w2) * (1.0 - hidden * hidden)
    gw1 = d_hidden.T @ x
    gb1 = d_hidden.sum(axis=0)
    return loss, gw1, gb1, gw2, gb2
