"""Compiled kernels for the two-layer tan-sigmoid network.

Same contract as ``_pykernels``. The matrices are tiny, so numpy's per-call
overhead dominates; here each layer is accumulated as a sequence of axpy
updates over a transposed weight copy, which keeps the per-unit sums
independent (and vectorisable) while preserving their left-to-right order.
"""
import numpy as np
from libc.math cimport expm1, fabs


cdef inline double tanh(double x) noexcept nogil:
    # glibc's tanh is several times slower than expm1 and dominates the loops;
    # expm1 keeps full relative accuracy near zero, and beyond |x| = 20 the
    # exact value rounds to +-1.
    cdef double e
    if fabs(x) > 20.0:
        return 1.0 if x > 0 else -1.0
    e = expm1(2.0 * x)
    return e / (e + 2.0)


cdef inline void layer(const double* wt, const double* b, const double* v,
                       Py_ssize_t n_in, Py_ssize_t n_out, double* act) noexcept nogil:
    """act = tanh(b + W v), with ``wt`` the (n_in, n_out) transpose of W."""
    cdef Py_ssize_t i, j
    cdef double vj
    for i in range(n_out):
        act[i] = b[i]
    for j in range(n_in):
        vj = v[j]
        for i in range(n_out):
            act[i] += wt[j * n_out + i] * vj
    for i in range(n_out):
        act[i] = tanh(act[i])


def forward_batch(const double[:, ::1] w1, const double[::1] b1,
                  const double[:, ::1] w2, const double[::1] b2,
                  const double[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef Py_ssize_t h = w1.shape[0], k = w2.shape[0]
    cdef Py_ssize_t r
    cdef const double[:, ::1] w1t = np.ascontiguousarray(np.asarray(w1).T)
    cdef const double[:, ::1] w2t = np.ascontiguousarray(np.asarray(w2).T)
    hidden_arr = np.empty((n, h))
    out_arr = np.empty((n, k))
    cdef double[:, ::1] hid = hidden_arr
    cdef double[:, ::1] out = out_arr
    if n == 0:
        return hidden_arr, out_arr
    with nogil:
        for r in range(n):
            layer(&w1t[0, 0], &b1[0], &x[r, 0], m, h, &hid[r, 0])
            layer(&w2t[0, 0], &b2[0], &hid[r, 0], h, k, &out[r, 0])
    return hidden_arr, out_arr


def batch_mse(const double[:, ::1] w1, const double[::1] b1,
              const double[:, ::1] w2, const double[::1] b2,
              const double[:, ::1] x, const double[:, ::1] t):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef Py_ssize_t h = w1.shape[0], k = w2.shape[0]
    cdef Py_ssize_t r, i
    cdef double diff, total = 0.0
    cdef const double[:, ::1] w1t = np.ascontiguousarray(np.asarray(w1).T)
    cdef const double[:, ::1] w2t = np.ascontiguousarray(np.asarray(w2).T)
    cdef double[::1] hid = np.empty(h)
    cdef double[::1] out = np.empty(k)
    with nogil:
        for r in range(n):
            layer(&w1t[0, 0], &b1[0], &x[r, 0], m, h, &hid[0])
            layer(&w2t[0, 0], &b2[0], &hid[0], h, k, &out[0])
            for i in range(k):
                diff = out[i] - t[r, i]
                total += diff * diff
    return total / (n * k)


def loss_grad(const double[:, ::1] w1, const double[::1] b1,
              const double[:, ::1] w2, const double[::1] b2,
              const double[:, ::1] x, const double[:, ::1] t):
    """Return ``(mse, gw1, gb1, gw2, gb2)`` for the mean squared error over the batch."""
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    cdef Py_ssize_t h = w1.shape[0], k = w2.shape[0]
    cdef Py_ssize_t r, i, j
    cdef double diff, a, d, total = 0.0
    cdef double scale = 2.0 / (n * k)
    cdef const double[:, ::1] w1t = np.ascontiguousarray(np.asarray(w1).T)
    cdef const double[:, ::1] w2t = np.ascontiguousarray(np.asarray(w2).T)

    gw1_arr = np.zeros((h, m))
    gb1_arr = np.zeros(h)
    gw2_arr = np.zeros((k, h))
    gb2_arr = np.zeros(k)
    cdef double[:, ::1] gw1 = gw1_arr
    cdef double[::1] gb1 = gb1_arr
    cdef double[:, ::1] gw2 = gw2_arr
    cdef double[::1] gb2 = gb2_arr
    cdef double[::1] hid = np.empty(h)
    cdef double[::1] out = np.empty(k)
    cdef double[::1] d_out = np.empty(k)
    cdef double[::1] d_hid = np.empty(h)

    with nogil:
        for r in range(n):
            layer(&w1t[0, 0], &b1[0], &x[r, 0], m, h, &hid[0])
            layer(&w2t[0, 0], &b2[0], &hid[0], h, k, &out[0])
            for i in range(k):
                a = out[i]
                diff = a - t[r, i]
                total += diff * diff
                d = scale * diff * (1.0 - a * a)
                d_out[i] = d
                gb2[i] += d
                for j in range(h):
                    gw2[i, j] += d * hid[j]
            for j in range(h):
                d_hid[j] = 0.0
            for i in range(k):
                d = d_out[i]
                for j in range(h):
                    d_hid[j] += d * w2[i, j]
            for j in range(h):
                d = d_hid[j] * (1.0 - hid[j] * hid[j])
                gb1[j] += d
                for i in range(m):
                    gw1[j, i] += d * x[r, i]
    return total / (n * k), gw1_arr, gb1_arr, gw2_arr, gb2_arr
