# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot sequence kernels.

Mirrors ``_reference`` exactly: same signatures, gate layout, and
zero-initial-state convention.  The sequential per-step work runs in C
loops; the large batched weight-gradient products still go through
numpy's BLAS where that is faster.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()

NAME = "fast"


cdef inline double _sigmoid(double z) noexcept:
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    cdef double e = exp(z)
    return e / (1.0 + e)


cdef void _matvec(const double[:, ::1] m, const double[::1] v, double[::1] out) noexcept:
    # out = m @ v
    cdef Py_ssize_t rows = m.shape[0], cols = m.shape[1], r, c
    cdef double acc
    for r in range(rows):
        acc = 0.0
        for c in range(cols):
            acc += m[r, c] * v[c]
        out[r] = acc


cdef void _matvec_t(const double[:, ::1] m, const double[::1] v, double[::1] out) noexcept:
    # out = m.T @ v
    cdef Py_ssize_t rows = m.shape[0], cols = m.shape[1], r, c
    for c in range(cols):
        out[c] = 0.0
    for r in range(rows):
        for c in range(cols):
            out[c] += m[r, c] * v[r]


def _input_rows(wx, x):
    if x.ndim == 1:
        return np.ascontiguousarray(wx.T[x])
    return np.ascontiguousarray(x @ wx.T)


def lstm_forward(wh, wx, b, x):
    """Run one LSTM direction over a sequence; see the reference backend."""
    cdef double[:, ::1] whv = np.ascontiguousarray(wh)
    cdef double[::1] bv = np.ascontiguousarray(b)
    xw_arr = _input_rows(np.asarray(wx), np.asarray(x))
    cdef double[:, ::1] xw = xw_arr
    cdef Py_ssize_t T = xw_arr.shape[0]
    cdef Py_ssize_t H = whv.shape[1]
    h_arr = np.empty((T, H))
    c_arr = np.empty((T, H))
    g_arr = np.empty((T, 4 * H))
    cdef double[:, ::1] hv = h_arr
    cdef double[:, ::1] cv = c_arr
    cdef double[:, ::1] gv = g_arr
    z_arr = np.empty(4 * H)
    prev_arr = np.zeros(H)
    cdef double[::1] z = z_arr
    cdef double[::1] h_prev = prev_arr
    cdef Py_ssize_t t, j
    cdef double f, i, g, o, c_new
    for t in range(T):
        _matvec(whv, h_prev, z)
        for j in range(4 * H):
            z[j] += xw[t, j] + bv[j]
        for j in range(H):
            f = _sigmoid(z[j])
            i = _sigmoid(z[H + j])
            g = tanh(z[2 * H + j])
            o = _sigmoid(z[3 * H + j])
            c_new = f * (cv[t - 1, j] if t > 0 else 0.0) + i * g
            gv[t, j] = f
            gv[t, H + j] = i
            gv[t, 2 * H + j] = g
            gv[t, 3 * H + j] = o
            cv[t, j] = c_new
            hv[t, j] = o * tanh(c_new)
            h_prev[j] = hv[t, j]
    return h_arr, c_arr, g_arr


def lstm_backward(wh, wx, x, h, c, gates, dh, need_dx=False):
    """Backpropagate through :func:`lstm_forward`; see the reference backend."""
    cdef double[:, ::1] whv = np.ascontiguousarray(wh)
    cdef double[:, ::1] hv = np.ascontiguousarray(h)
    cdef double[:, ::1] cv = np.ascontiguousarray(c)
    cdef double[:, ::1] gv = np.ascontiguousarray(gates)
    cdef double[:, ::1] dhv = np.ascontiguousarray(dh)
    cdef Py_ssize_t T = hv.shape[0]
    cdef Py_ssize_t H = hv.shape[1]
    dz_arr = np.empty((T, 4 * H))
    cdef double[:, ::1] dz = dz_arr
    rec_arr = np.zeros(H)
    crec_arr = np.zeros(H)
    cdef double[::1] dh_rec = rec_arr
    cdef double[::1] dc_rec = crec_arr
    cdef Py_ssize_t t, j
    cdef double f, i, g, o, c_prev, tc, dh_total, dc_total
    for t in range(T - 1, -1, -1):
        for j in range(H):
            f = gv[t, j]
            i = gv[t, H + j]
            g = gv[t, 2 * H + j]
            o = gv[t, 3 * H + j]
            c_prev = cv[t - 1, j] if t > 0 else 0.0
            tc = tanh(cv[t, j])
            dh_total = dhv[t, j] + dh_rec[j]
            dc_total = dc_rec[j] + dh_total * o * (1.0 - tc * tc)
            dz[t, j] = dc_total * c_prev * f * (1.0 - f)
            dz[t, H + j] = dc_total * g * i * (1.0 - i)
            dz[t, 2 * H + j] = dc_total * i * (1.0 - g * g)
            dz[t, 3 * H + j] = dh_total * tc * o * (1.0 - o)
            dc_rec[j] = dc_total * f
        _matvec_t(whv, dz[t], dh_rec)
    x_arr = np.asarray(x)
    wx_arr = np.asarray(wx)
    dwh = dz_arr[1:].T @ np.asarray(h)[:-1] if T > 1 else np.zeros_like(np.asarray(wh))
    db = dz_arr.sum(axis=0)
    if x_arr.ndim == 1:
        dwx_t = np.zeros((wx_arr.shape[1], 4 * H))
        np.add.at(dwx_t, x_arr, dz_arr)
        dwx = dwx_t.T
        dx = None
    else:
        dwx = dz_arr.T @ x_arr
        dx = dz_arr @ wx_arr if need_dx else None
    return dwh, dwx, db, dx


cdef void _softmax5(const double[::1] z, double[::1] out, Py_ssize_t k) noexcept:
    cdef Py_ssize_t j
    cdef double m = z[0], s = 0.0
    for j in range(1, k):
        if z[j] > m:
            m = z[j]
    for j in range(k):
        out[j] = exp(z[j] - m)
        s += out[j]
    for j in range(k):
        out[j] /= s


def transition_forward(lam, sel, up, down):
    """Recurrent score shaping; see the reference backend."""
    cdef double[:, ::1] lamv = np.ascontiguousarray(lam)
    cdef const signed char[::1] selv = np.ascontiguousarray(sel, dtype=np.int8)
    cdef double[:, ::1] upv = np.ascontiguousarray(up)
    cdef double[:, ::1] downv = np.ascontiguousarray(down)
    cdef Py_ssize_t T = lamv.shape[0]
    cdef Py_ssize_t k = lamv.shape[1]
    out_arr = np.empty((T, k))
    cdef double[:, ::1] yhat = out_arr
    z_arr = np.empty(k)
    cdef double[::1] z = z_arr
    cdef Py_ssize_t t, a, bq
    cdef double acc
    for t in range(T):
        if t == 0 or selv[t] == 0:
            _softmax5(lamv[t], yhat[t], k)
            continue
        for bq in range(k):
            acc = lamv[t, bq]
            if selv[t] == 1:
                for a in range(k):
                    acc += upv[a, bq] * yhat[t - 1, a]
            else:
                for a in range(k):
                    acc += downv[a, bq] * yhat[t - 1, a]
            z[bq] = acc
        _softmax5(z, yhat[t], k)
    return out_arr


def transition_backward(yhat, sel, up, down, dlogits):
    """Backpropagate through :func:`transition_forward`; see the reference backend."""
    cdef double[:, ::1] yv = np.ascontiguousarray(yhat)
    cdef const signed char[::1] selv = np.ascontiguousarray(sel, dtype=np.int8)
    cdef double[:, ::1] upv = np.ascontiguousarray(up)
    cdef double[:, ::1] downv = np.ascontiguousarray(down)
    cdef double[:, ::1] dlv = np.ascontiguousarray(dlogits)
    cdef Py_ssize_t T = yv.shape[0]
    cdef Py_ssize_t k = yv.shape[1]
    dlam_arr = np.empty((T, k))
    dup_arr = np.zeros((k, k))
    ddown_arr = np.zeros((k, k))
    cdef double[:, ::1] dlam = dlam_arr
    cdef double[:, ::1] dup = dup_arr
    cdef double[:, ::1] ddown = ddown_arr
    rec_arr = np.zeros(k)
    dlg_arr = np.empty(k)
    cdef double[::1] dy_rec = rec_arr
    cdef double[::1] dlg = dlg_arr
    cdef Py_ssize_t t, a, bq
    cdef double dot
    for t in range(T - 1, -1, -1):
        dot = 0.0
        for a in range(k):
            dot += dy_rec[a] * yv[t, a]
        for a in range(k):
            dlg[a] = yv[t, a] * (dy_rec[a] - dot) + dlv[t, a]
            dlam[t, a] = dlg[a]
        if t > 0 and selv[t] != 0:
            if selv[t] == 1:
                for a in range(k):
                    for bq in range(k):
                        dup[a, bq] += yv[t - 1, a] * dlg[bq]
                for a in range(k):
                    dot = 0.0
                    for bq in range(k):
                        dot += upv[a, bq] * dlg[bq]
                    dy_rec[a] = dot
            else:
                for a in range(k):
                    for bq in range(k):
                        ddown[a, bq] += yv[t - 1, a] * dlg[bq]
                for a in range(k):
                    dot = 0.0
                    for bq in range(k):
                        dot += downv[a, bq] * dlg[bq]
                    dy_rec[a] = dot
        else:
            for a in range(k):
                dy_rec[a] = 0.0
    return dlam_arr, dup_arr, ddown_arr
