"""Finger-transition shaping applied on top of raw tagger scores.

Two learned 5x5 matrices, one for ascending and one for descending
single-tone steps, mix the previous position's label distribution into
the current position's scores before the softmax.  Which matrix applies
(or none) is decidable from the token pair alone, so the selector is
precomputed per sequence and shared by training and decoding.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .encode import PitchDiffToken

SEL_NONE = 0
SEL_UP = 1
SEL_DOWN = 2


def selector_code(token: PitchDiffToken, prev: PitchDiffToken | None) -> int:
    """Transition-matrix choice for a position given its predecessor.

    The ascending/descending matrices only describe passages of isolated
    tones, so both endpoints must be single-tone and the step must be a
    real interval: repeated notes, chord members, leaps, and sequence
    starts all get no matrix.
    """
    if prev is None or not prev.is_single_tone or not token.is_single_tone:
        return SEL_NONE
    if token.is_leap:
        return SEL_NONE
    if token.d > 0:
        return SEL_UP
    if token.d < 0:
        return SEL_DOWN
    return SEL_NONE


def selector_codes(tokens: list[PitchDiffToken]) -> np.ndarray:
    """Per-position selector vector (int8) for a token sequence."""
    out = np.zeros(len(tokens), dtype=np.int8)
    prev = None
    for t, token in enumerate(tokens):
        out[t] = selector_code(token, prev)
        prev = token
    return out


def select_matrix(token: PitchDiffToken, prev: PitchDiffToken | None,
                  up: np.ndarray, down: np.ndarray) -> np.ndarray:
    """The matrix mixed into a position's scores; zeros when none applies."""
    code = selector_code(token, prev)
    if code == SEL_UP:
        return up
    if code == SEL_DOWN:
        return down
    return np.zeros_like(up)


def constrained_forward(lam: np.ndarray, sel: np.ndarray, up: np.ndarray,
                        down: np.ndarray) -> np.ndarray:
    """Label probabilities after the transition recurrence (kernel-backed)."""
    return kernels.transition_forward(lam, sel, up, down)


def decode_argmax(yhat: np.ndarray) -> np.ndarray:
    """Most probable finger per position, 1-based; ties go to the smaller finger."""
    return np.argmax(yhat, axis=1).astype(np.int64) + 1
