"""Pure-numpy training kernels; semantics mirrored by the compiled twin.

Both backends implement one epoch of mini-batch Adam for the
single-hidden-layer sigmoid network and the batched loss/gradient used by
the gradient checker.  head = 0 selects the linear-output MSE head,
head = 1 the softmax cross-entropy head.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

HEAD_REGRESSION = 0
HEAD_CLASSIFICATION = 1


def _forward(w1, b1, w2, b2, x):
    hidden = expit(x @ w1.T + b1)
    return hidden, hidden @ w2.T + b2


def _loss_dout(out, y, head):
    n = len(out)
    if head == HEAD_CLASSIFICATION:
        shifted = out - out.max(axis=1, keepdims=True)
        ez = np.exp(shifted)
        p = ez / ez.sum(axis=1, keepdims=True)
        loss = -np.mean(np.log(np.maximum((p * y).sum(axis=1), 1e-300)))
        return loss, (p - y) / n
    diff = out - y
    return float(np.mean(np.sum(diff * diff, axis=1))), 2.0 * diff / n


def loss_and_grads(w1, b1, w2, b2, x, y, head):
    """Mean loss over the batch and its analytic parameter gradients."""
    hidden, out = _forward(w1, b1, w2, b2, x)
    loss, dout = _loss_dout(out, y, head)
    gw2 = dout.T @ hidden
    gb2 = dout.sum(axis=0)
    dh = (dout @ w2) * hidden * (1.0 - hidden)
    gw1 = dh.T @ x
    gb1 = dh.sum(axis=0)
    return loss, gw1, gb1, gw2, gb2


def _adam_update(param, grad, m, v, lr, beta1, beta2, eps, step):
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


def train_epoch(
    w1, b1, w2, b2,
    mw1, mb1, mw2, mb2,
    vw1, vb1, vw2, vb2,
    x, y, order, batch_size,
    lr, beta1, beta2, eps, step, head,
):
    """Run all mini-batches of one epoch in place; returns (mean loss, step)."""
    n = len(order)
    total = 0.0
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        loss, gw1, gb1, gw2, gb2 = loss_and_grads(w1, b1, w2, b2, x[idx], y[idx], head)
        step += 1
        _adam_update(w1, gw1, mw1, vw1, lr, beta1, beta2, eps, step)
        _adam_update(b1, gb1, mb1, vb1, lr, beta1, beta2, eps, step)
        _adam_update(w2, gw2, mw2, vw2, lr, beta1, beta2, eps, step)
        _adam_update(b2, gb2, mb2, vb2, lr, beta1, beta2, eps, step)
        total += loss * len(idx)
    return total / n, step
