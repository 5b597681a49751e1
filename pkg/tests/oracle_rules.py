"""Independent plain-Python oracle for constrained decoding.

Implements the documented contract from scratch (no numpy, no imports
from the package's rules module) so tests can compare the production
decoder against a second derivation: per-hand product-threshold masking
inside the probability recurrence, strict-threshold masking of the
emitted finger's successors, renormalized distribution carried forward.
"""

from __future__ import annotations

import math

STRICT = 4.5
RELAXED_LEFT = 5.5


def crossing(hand: str, d_sign: int, f_prev: int, f_next: int) -> bool:
    swing = d_sign * (f_next - f_prev)
    return swing < 0 if hand == "right" else swing > 0


def allowed(hand: str, d_sign: int, f_prev: int, f_next: int, strict: bool) -> bool:
    if not crossing(hand, d_sign, f_prev, f_next):
        return True
    if strict:
        threshold = STRICT
    else:
        threshold = STRICT if hand == "right" else RELAXED_LEFT
    return f_prev * f_next <= threshold


def softmax(zs):
    top = max(zs)
    es = [math.exp(z - top) for z in zs]
    total = sum(es)
    return [e / total for e in es]


def constrained_step(token, prev_token) -> bool:
    return (prev_token is not None and prev_token.n == 0 and token.n == 0
            and not token.is_leap and token.d != 0)


def decode(lam_rows, tokens, hand: str, up, down):
    """Returns (distributions, fingers) as plain lists; fingers 1-based."""
    dists = []
    fingers = []
    carrier = None
    prev_token = None
    for t, token in enumerate(tokens):
        z = list(lam_rows[t])
        if constrained_step(token, prev_token):
            d_sign = 1 if token.d > 0 else -1
            w = up if d_sign > 0 else down
            for j in range(5):
                acc = 0.0
                for i in range(5):
                    if allowed(hand, d_sign, i + 1, j + 1, strict=False):
                        acc += w[i][j] * carrier[i]
                z[j] += acc
        p = softmax(z)
        dists.append(p)
        if constrained_step(token, prev_token):
            d_sign = 1 if token.d > 0 else -1
            f_prev = fingers[-1]
            q = [p[j] if allowed(hand, d_sign, f_prev, j + 1, strict=True) else 0.0
                 for j in range(5)]
            total = sum(q)
            q = [v / total for v in q]
        else:
            q = p
        best = 0
        for j in range(1, 5):
            if q[j] > q[best]:
                best = j
        fingers.append(best + 1)
        carrier = q
        prev_token = token
    return dists, fingers
