"""Pure-numpy implementation of the hot sequence kernels.

This is the fallback backend; ``pdfinger.kernels`` prefers the compiled
``_speedups`` extension when it is importable.  Both backends implement the
same four functions with identical shapes and gate layout so they can be
swapped and cross-checked freely.

Conventions:
  * gate order along the 4H axis is [forget, input, candidate, output]
  * ``x`` is either an int64 id vector (T,) indexing one-hot columns of
    ``wx``, or a dense float64 matrix (T, E)
  * hidden and cell states start at zero
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

NAME = "reference"


def _input_rows(wx: np.ndarray, x: np.ndarray) -> np.ndarray:
    if x.ndim == 1:
        return wx.T[x]
    return x @ wx.T


def lstm_forward(wh, wx, b, x):
    """Run one LSTM direction over a sequence.

    Returns ``(h, c, gates)`` with shapes (T, H), (T, H), (T, 4H); gates
    hold post-activation values for the backward pass.
    """
    T = x.shape[0]
    H = wh.shape[1]
    xw = _input_rows(wx, x)
    h = np.empty((T, H))
    c = np.empty((T, H))
    gates = np.empty((T, 4 * H))
    h_prev = np.zeros(H)
    c_prev = np.zeros(H)
    for t in range(T):
        z = wh @ h_prev + xw[t] + b
        f = expit(z[:H])
        i = expit(z[H : 2 * H])
        g = np.tanh(z[2 * H : 3 * H])
        o = expit(z[3 * H :])
        c_prev = f * c_prev + i * g
        h_prev = o * np.tanh(c_prev)
        gates[t, :H] = f
        gates[t, H : 2 * H] = i
        gates[t, 2 * H : 3 * H] = g
        gates[t, 3 * H :] = o
        c[t] = c_prev
        h[t] = h_prev
    return h, c, gates


def lstm_backward(wh, wx, x, h, c, gates, dh, need_dx=False):
    """Backpropagate through :func:`lstm_forward`.

    ``dh`` is the loss gradient on each hidden state.  Returns
    ``(dwh, dwx, db, dx)``; ``dx`` is None unless ``need_dx`` (dense input
    only).
    """
    T, H = h.shape
    dz = np.empty((T, 4 * H))
    dh_rec = np.zeros(H)
    dc_rec = np.zeros(H)
    for t in range(T - 1, -1, -1):
        f = gates[t, :H]
        i = gates[t, H : 2 * H]
        g = gates[t, 2 * H : 3 * H]
        o = gates[t, 3 * H :]
        c_prev = c[t - 1] if t > 0 else np.zeros(H)
        tc = np.tanh(c[t])
        dh_total = dh[t] + dh_rec
        do = dh_total * tc
        dc_total = dc_rec + dh_total * o * (1.0 - tc * tc)
        dz[t, :H] = dc_total * c_prev * f * (1.0 - f)
        dz[t, H : 2 * H] = dc_total * g * i * (1.0 - i)
        dz[t, 2 * H : 3 * H] = dc_total * i * (1.0 - g * g)
        dz[t, 3 * H :] = do * o * (1.0 - o)
        dh_rec = wh.T @ dz[t]
        dc_rec = dc_total * f
    dwh = dz[1:].T @ h[:-1] if T > 1 else np.zeros_like(wh)
    db = dz.sum(axis=0)
    if x.ndim == 1:
        dwx_t = np.zeros((wx.shape[1], 4 * H))
        np.add.at(dwx_t, x, dz)
        dwx = dwx_t.T
        dx = None
    else:
        dwx = dz.T @ x
        dx = dz @ wx if need_dx else None
    return dwh, dwx, db, dx


def _softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


def transition_forward(lam, sel, up, down):
    """Recurrent score shaping: logits_t = W_sel^T yhat_{t-1} + lam_t, then softmax.

    ``sel`` holds 0 (no matrix), 1 (ascending) or 2 (descending) per
    position; position 0 must be 0.
    """
    T = lam.shape[0]
    yhat = np.empty_like(lam)
    yhat[0] = _softmax(lam[0])
    for t in range(1, T):
        if sel[t] == 0:
            yhat[t] = _softmax(lam[t])
        else:
            w = up if sel[t] == 1 else down
            yhat[t] = _softmax(w.T @ yhat[t - 1] + lam[t])
    return yhat


def transition_backward(yhat, sel, up, down, dlogits):
    """Backpropagate through :func:`transition_forward`.

    ``dlogits`` is the direct loss gradient on each position's pre-softmax
    logits (for cross-entropy: (yhat - onehot)/T).  Returns
    ``(dlam, dup, ddown)``.
    """
    T, k = yhat.shape
    dlam = np.empty_like(yhat)
    dup = np.zeros_like(up)
    ddown = np.zeros_like(down)
    dy_rec = np.zeros(k)
    for t in range(T - 1, -1, -1):
        # softmax jacobian applied to the recurrent gradient, plus direct term
        dlg = yhat[t] * (dy_rec - dy_rec @ yhat[t]) + dlogits[t]
        dlam[t] = dlg
        if t > 0 and sel[t] != 0:
            w = up if sel[t] == 1 else down
            dw = dup if sel[t] == 1 else ddown
            dw += np.outer(yhat[t - 1], dlg)
            dy_rec = w @ dlg
        else:
            dy_rec = np.zeros(k)
    return dlam, dup, ddown
