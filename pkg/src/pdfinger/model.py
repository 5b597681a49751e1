"""Bidirectional LSTM tagger with learned transition shaping.

Parameters are held in plain float64 numpy arrays and trained with
hand-derived backpropagation through time, so gradients can be audited
against finite differences.  The per-sequence forward/backward work runs
through ``pdfinger.kernels`` (compiled when available).

The tagger maps a sequence of input ids (pitch-difference codes or raw
notes, one-hot) to a length-5 score vector per position; the transition
recurrence turns scores into label probabilities during training and
unconstrained inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DataError, NumericError

NUM_FINGERS = 5


@dataclass
class LstmCellParams:
    """One direction's gate weights; each matrix is (hidden, hidden + input)."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.w_f.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_f.shape[1] - self.w_f.shape[0]

    def stacked(self):
        """(wh, wx, b) in kernel layout: gates stacked [f, i, c, o] along 4H."""
        h = self.hidden_size
        ws = (self.w_f, self.w_i, self.w_c, self.w_o)
        wh = np.ascontiguousarray(np.vstack([w[:, :h] for w in ws]))
        wx = np.ascontiguousarray(np.vstack([w[:, h:] for w in ws]))
        b = np.concatenate([self.b_f, self.b_i, self.b_c, self.b_o])
        return wh, wx, b


def _unstack_grads(dwh, dwx, db, hidden):
    out = {}
    for slot, gate in enumerate("fico"):
        rows = slice(slot * hidden, (slot + 1) * hidden)
        out[f"w_{gate}"] = np.hstack([dwh[rows], dwx[rows]])
        out[f"b_{gate}"] = db[rows]
    return out


@dataclass
class CellState:
    """Hidden and cell vectors carried between LSTM steps."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_size: int) -> "CellState":
        return cls(np.zeros(hidden_size), np.zeros(hidden_size))


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))


def cell_step(cell: LstmCellParams, prev: CellState, e: np.ndarray) -> CellState:
    """One LSTM cell update (definitional form; the hot path lives in kernels)."""
    if e.shape[0] != cell.input_size or prev.h.shape[0] != cell.hidden_size:
        raise DataError(
            f"cell step dimension mismatch: input {e.shape[0]} vs {cell.input_size}, "
            f"state {prev.h.shape[0]} vs {cell.hidden_size}"
        )
    he = np.concatenate([prev.h, e])
    f = sigmoid(cell.w_f @ he + cell.b_f)
    i = sigmoid(cell.w_i @ he + cell.b_i)
    g = np.tanh(cell.w_c @ he + cell.b_c)
    o = sigmoid(cell.w_o @ he + cell.b_o)
    c = f * prev.c + i * g
    return CellState(h=o * np.tanh(c), c=c)


@dataclass
class ModelParams:
    """All trainable tensors of one hand's tagger."""

    layers: list[dict]  # per layer: {"fwd": LstmCellParams, "bwd": LstmCellParams}
    proj_w: np.ndarray  # (k, 2*hidden)
    proj_b: np.ndarray  # (k,)
    trans_up: np.ndarray  # (k, k), row = previous finger index
    trans_down: np.ndarray  # (k, k)
    k: int = NUM_FINGERS

    @property
    def hidden_size(self) -> int:
        return self.layers[0]["fwd"].hidden_size

    @property
    def input_size(self) -> int:
        return self.layers[0]["fwd"].input_size

    @property
    def depth(self) -> int:
        return len(self.layers)

    def tensors(self) -> dict[str, np.ndarray]:
        """Flat name -> array view of every trainable tensor, in a fixed order."""
        out = {}
        for idx, layer in enumerate(self.layers):
            for direction in ("fwd", "bwd"):
                cell = layer[direction]
                for gate in "fico":
                    out[f"layers.{idx}.{direction}.w_{gate}"] = getattr(cell, f"w_{gate}")
                    out[f"layers.{idx}.{direction}.b_{gate}"] = getattr(cell, f"b_{gate}")
        out["proj_w"] = self.proj_w
        out["proj_b"] = self.proj_b
        out["trans_up"] = self.trans_up
        out["trans_down"] = self.trans_down
        return out

    def set_tensor(self, name: str, value: np.ndarray) -> None:
        if name.startswith("layers."):
            _, idx, direction, leaf = name.split(".")
            setattr(self.layers[int(idx)][direction], leaf, value)
        else:
            setattr(self, name, value)


def _init_cell(hidden, inputs, rng) -> LstmCellParams:
    r = 1.0 / np.sqrt(hidden + inputs)
    def w():
        return rng.uniform(-r, r, size=(hidden, hidden + inputs))
    def b():
        return rng.uniform(-r, r, size=hidden)
    # forget bias starts at 1.0 to keep long-range memory open early in training
    return LstmCellParams(w_f=w(), w_i=w(), w_c=w(), w_o=w(),
                          b_f=np.ones(hidden), b_i=b(), b_c=b(), b_o=b())


def init_params(hidden_size: int, input_size: int, depth: int = 1,
                rng: np.random.Generator | None = None) -> ModelParams:
    """Fresh parameters: uniform [-r, r] with r = 1/sqrt(fan), zero transitions."""
    if rng is None:
        rng = np.random.default_rng(0)
    layers = []
    for idx in range(depth):
        fan_in = input_size if idx == 0 else 2 * hidden_size
        layers.append({
            "fwd": _init_cell(hidden_size, fan_in, rng),
            "bwd": _init_cell(hidden_size, fan_in, rng),
        })
    r = 1.0 / np.sqrt(2 * hidden_size)
    proj_w = rng.uniform(-r, r, size=(NUM_FINGERS, 2 * hidden_size))
    proj_b = np.zeros(NUM_FINGERS)
    # transitions start at zero: the recurrence is a no-op until trained
    return ModelParams(layers=layers, proj_w=proj_w, proj_b=proj_b,
                       trans_up=np.zeros((NUM_FINGERS, NUM_FINGERS)),
                       trans_down=np.zeros((NUM_FINGERS, NUM_FINGERS)))


def bilstm_forward(params: ModelParams, x: np.ndarray, with_cache: bool = False):
    """Per-position label scores for an input sequence.

    ``x`` is an int64 id vector (bottom layer input is one-hot).  Returns a
    (T, k) score matrix; with ``with_cache`` also the activations needed
    for the backward pass.
    """
    if x.shape[0] == 0:
        raise DataError("cannot run the tagger on an empty sequence")
    caches = []
    layer_input = x
    for layer in params.layers:
        wh_f, wx_f, b_f = layer["fwd"].stacked()
        wh_b, wx_b, b_b = layer["bwd"].stacked()
        x_rev = np.ascontiguousarray(layer_input[::-1])
        h_f, c_f, g_f = kernels.lstm_forward(wh_f, wx_f, b_f, layer_input)
        h_brev, c_brev, g_brev = kernels.lstm_forward(wh_b, wx_b, b_b, x_rev)
        concat = np.hstack([h_f, h_brev[::-1]])
        caches.append({
            "input": layer_input, "input_rev": x_rev,
            "fwd": (wh_f, wx_f, h_f, c_f, g_f),
            "bwd": (wh_b, wx_b, h_brev, c_brev, g_brev),
            "concat": concat,
        })
        layer_input = concat
    lam = layer_input @ params.proj_w.T + params.proj_b
    if with_cache:
        return lam, caches
    return lam


def _softmax_rows(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def loss_and_gradients(params: ModelParams, x: np.ndarray, sel: np.ndarray,
                       gold_fingers: np.ndarray, use_transition: bool = True):
    """Mean cross-entropy of the tagger on one sequence, with exact gradients.

    ``sel`` is the per-position transition-matrix selector (0 none, 1 up,
    2 down) derived from the token sequence; ``gold_fingers`` holds labels
    in 1..5.  Gradients flow through the transition recurrence and both
    LSTM directions.  Returns ``(loss, grads)`` with ``grads`` keyed like
    :meth:`ModelParams.tensors`.
    """
    T = x.shape[0]
    if gold_fingers.shape[0] != T:
        raise DataError(f"{T} inputs but {gold_fingers.shape[0]} finger labels")
    if gold_fingers.min() < 1 or gold_fingers.max() > params.k:
        raise DataError("finger labels must be in 1..5")
    lam, caches = bilstm_forward(params, x, with_cache=True)

    if use_transition:
        yhat = kernels.transition_forward(lam, sel, params.trans_up, params.trans_down)
    else:
        yhat = _softmax_rows(lam)
    gold_idx = gold_fingers - 1
    loss = -np.log(yhat[np.arange(T), gold_idx]).mean()

    dlogits = yhat.copy()
    dlogits[np.arange(T), gold_idx] -= 1.0
    dlogits /= T
    if use_transition:
        dlam, dup, ddown = kernels.transition_backward(yhat, sel, params.trans_up,
                                                       params.trans_down, dlogits)
    else:
        dlam, dup, ddown = dlogits, np.zeros_like(params.trans_up), np.zeros_like(params.trans_down)

    grads = {"trans_up": dup, "trans_down": ddown}
    top = caches[-1]["concat"]
    grads["proj_w"] = dlam.T @ top
    grads["proj_b"] = dlam.sum(axis=0)
    dconcat = dlam @ params.proj_w
    hidden = params.hidden_size
    for idx in range(params.depth - 1, -1, -1):
        cache = caches[idx]
        dh_f = np.ascontiguousarray(dconcat[:, :hidden])
        dh_brev = np.ascontiguousarray(dconcat[:, hidden:][::-1])
        need_dx = idx > 0
        wh_f, wx_f, h_f, c_f, g_f = cache["fwd"]
        wh_b, wx_b, h_b, c_b, g_b = cache["bwd"]
        dwh, dwx, db, dx_f = kernels.lstm_backward(wh_f, wx_f, cache["input"], h_f, c_f, g_f,
                                                   dh_f, need_dx)
        for leaf, grad in _unstack_grads(dwh, dwx, db, hidden).items():
            grads[f"layers.{idx}.fwd.{leaf}"] = grad
        dwh, dwx, db, dx_brev = kernels.lstm_backward(wh_b, wx_b, cache["input_rev"], h_b, c_b,
                                                      g_b, dh_brev, need_dx)
        for leaf, grad in _unstack_grads(dwh, dwx, db, hidden).items():
            grads[f"layers.{idx}.bwd.{leaf}"] = grad
        if need_dx:
            dconcat = dx_f + dx_brev[::-1]
    return loss, grads


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per trainable tensor."""

    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        tensors = params.tensors()
        return cls(m={n: np.zeros_like(t) for n, t in tensors.items()},
                   v={n: np.zeros_like(t) for n, t in tensors.items()})


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(params: ModelParams, grads: dict[str, np.ndarray], state: AdamState,
              hyper: AdamHyper = AdamHyper()) -> None:
    """Standard bias-corrected Adam update, applied in place."""
    state.step += 1
    t = state.step
    tensors = params.tensors()
    for name, theta in tensors.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}")
        m = state.m[name]
        v = state.v[name]
        m *= hyper.beta1
        m += (1 - hyper.beta1) * g
        v *= hyper.beta2
        v += (1 - hyper.beta2) * g * g
        m_hat = m / (1 - hyper.beta1 ** t)
        v_hat = v / (1 - hyper.beta2 ** t)
        theta -= hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most ``max_norm``."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm > 0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total
