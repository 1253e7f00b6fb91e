# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of kernels.reference: fused mini-batch Adam epochs.

Matrices are small (M = 51 bins, L <= 50 hidden, K <= 3 outputs), so plain
C loops beat BLAS dispatch overhead here.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt

cnp.import_array()

HEAD_REGRESSION = 0
HEAD_CLASSIFICATION = 1


cdef inline double _sigmoid(double z) nogil:
    return 1.0 / (1.0 + exp(-z))


cdef double _batch_pass(
    double[:, ::1] w1, double[::1] b1, double[:, ::1] w2, double[::1] b2,
    double[:, ::1] x, double[:, ::1] y, long[::1] idx, Py_ssize_t n_batch,
    int head,
    double[:, ::1] hidden, double[:, ::1] dout,
    double[:, ::1] gw1, double[::1] gb1, double[:, ::1] gw2, double[::1] gb2,
) nogil:
    """Forward + backward over one batch; gradients are means over it."""
    cdef Py_ssize_t L = w1.shape[0], M = w1.shape[1], K = w2.shape[0]
    cdef Py_ssize_t b, i, j, k, row
    cdef double z, loss = 0.0, mx, denom, diff, p

    for i in range(L):
        gb1[i] = 0.0
        for j in range(M):
            gw1[i, j] = 0.0
    for k in range(K):
        gb2[k] = 0.0
        for i in range(L):
            gw2[k, i] = 0.0

    for b in range(n_batch):
        row = idx[b]
        for i in range(L):
            z = b1[i]
            for j in range(M):
                z += w1[i, j] * x[row, j]
            hidden[b, i] = _sigmoid(z)
        for k in range(K):
            z = b2[k]
            for i in range(L):
                z += w2[k, i] * hidden[b, i]
            dout[b, k] = z  # raw output, converted below

    if head == HEAD_CLASSIFICATION:
        for b in range(n_batch):
            row = idx[b]
            mx = dout[b, 0]
            for k in range(1, K):
                if dout[b, k] > mx:
                    mx = dout[b, k]
            denom = 0.0
            for k in range(K):
                dout[b, k] = exp(dout[b, k] - mx)
                denom += dout[b, k]
            for k in range(K):
                p = dout[b, k] / denom
                if y[row, k] == 1.0:
                    loss -= log(p if p > 1e-300 else 1e-300)
                dout[b, k] = (p - y[row, k]) / n_batch
    else:
        for b in range(n_batch):
            row = idx[b]
            for k in range(K):
                diff = dout[b, k] - y[row, k]
                loss += diff * diff
                dout[b, k] = 2.0 * diff / n_batch
    loss /= n_batch

    for b in range(n_batch):
        row = idx[b]
        for k in range(K):
            gb2[k] += dout[b, k]
            for i in range(L):
                gw2[k, i] += dout[b, k] * hidden[b, i]
        for i in range(L):
            z = 0.0
            for k in range(K):
                z += dout[b, k] * w2[k, i]
            z *= hidden[b, i] * (1.0 - hidden[b, i])
            gb1[i] += z
            for j in range(M):
                gw1[i, j] += z * x[row, j]
    return loss


cdef void _adam(
    double[::1] param, double[::1] grad, double[::1] m, double[::1] v,
    double lr, double beta1, double beta2, double eps, double c1, double c2,
) nogil:
    cdef Py_ssize_t i
    for i in range(param.shape[0]):
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i]
        param[i] -= lr * (m[i] / c1) / (sqrt(v[i] / c2) + eps)


def loss_and_grads(w1, b1, w2, b2, x, y, int head):
    cdef Py_ssize_t n = x.shape[0]
    idx = np.arange(n, dtype=np.int64)
    hidden = np.empty((n, w1.shape[0]))
    dout = np.empty((n, w2.shape[0]))
    gw1 = np.empty_like(w1)
    gb1 = np.empty_like(b1)
    gw2 = np.empty_like(w2)
    gb2 = np.empty_like(b2)
    cdef double loss = _batch_pass(
        w1, b1, w2, b2, x, y, idx, n, head, hidden, dout, gw1, gb1, gw2, gb2
    )
    return loss, gw1, gb1, gw2, gb2


def train_epoch(
    double[:, ::1] w1, double[::1] b1, double[:, ::1] w2, double[::1] b2,
    double[:, ::1] mw1, double[::1] mb1, double[:, ::1] mw2, double[::1] mb2,
    double[:, ::1] vw1, double[::1] vb1, double[:, ::1] vw2, double[::1] vb2,
    double[:, ::1] x, double[:, ::1] y, long[::1] order, Py_ssize_t batch_size,
    double lr, double beta1, double beta2, double eps, long step, int head,
):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t L = w1.shape[0], M = w1.shape[1], K = w2.shape[0]
    cdef Py_ssize_t start, n_batch
    cdef double total = 0.0, loss, c1, c2

    hidden_arr = np.empty((batch_size, L))
    dout_arr = np.empty((batch_size, K))
    gw1_arr = np.empty((L, M))
    gb1_arr = np.empty(L)
    gw2_arr = np.empty((K, L))
    gb2_arr = np.empty(K)
    cdef double[:, ::1] hidden = hidden_arr, dout = dout_arr
    cdef double[:, ::1] gw1 = gw1_arr, gw2 = gw2_arr
    cdef double[::1] gb1 = gb1_arr, gb2 = gb2_arr

    # flat views for the Adam sweep
    cdef double[::1] w1f = np.ravel(np.asarray(w1)), gw1f = np.ravel(gw1_arr)
    cdef double[::1] w2f = np.ravel(np.asarray(w2)), gw2f = np.ravel(gw2_arr)
    cdef double[::1] mw1f = np.ravel(np.asarray(mw1)), vw1f = np.ravel(np.asarray(vw1))
    cdef double[::1] mw2f = np.ravel(np.asarray(mw2)), vw2f = np.ravel(np.asarray(vw2))

    for start in range(0, n, batch_size):
        n_batch = min(batch_size, n - start)
        loss = _batch_pass(
            w1, b1, w2, b2, x, y, order[start : start + n_batch], n_batch,
            head, hidden, dout, gw1, gb1, gw2, gb2,
        )
        step += 1
        c1 = 1.0 - beta1 ** step
        c2 = 1.0 - beta2 ** step
        _adam(w1f, gw1f, mw1f, vw1f, lr, beta1, beta2, eps, c1, c2)
        _adam(b1, gb1, mb1, vb1, lr, beta1, beta2, eps, c1, c2)
        _adam(w2f, gw2f, mw2f, vw2f, lr, beta1, beta2, eps, c1, c2)
        _adam(b2, gb2, mb2, vb2, lr, beta1, beta2, eps, c1, c2)
        total += loss * n_batch
    return total / n, step
