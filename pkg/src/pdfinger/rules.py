"""Kinematic feasibility rules for finger transitions.

A crossing (one finger passing over or under another) is only playable
when the thumb is involved, and only within an octave.  That knowledge
is kept in two forms: a closed-form predicate over (hand, step, finger
pair), and literal 5x5 tables; ``audit`` cross-checks them so a
transcription slip cannot ship silently.

At decode time the rules prune the tagger's output so the emitted
fingering contains no infeasible step.  The probability recurrence masks
transition-matrix cells with the per-hand predicate; the greedy label
choice additionally masks successors of the finger actually emitted,
using the stricter shared threshold, and the renormalized distribution
is what flows into the next recurrence step.
"""

from __future__ import annotations

import numpy as np

from .encode import PitchDiffToken
from .errors import NumericError
from .pig import Hand
from .transitions import SEL_DOWN, SEL_NONE, SEL_UP, selector_codes

# Literal allowed/forbidden grid for right-hand descending steps:
# rows are the previous finger 1..5, columns the next finger.
TABLE_RIGHT_DESC = np.array([
    [1, 1, 1, 1, 0],
    [1, 1, 0, 0, 0],
    [1, 1, 1, 0, 0],
    [1, 1, 1, 1, 0],
    [1, 1, 1, 1, 1],
], dtype=bool)

# The left hand additionally tolerates the 5th-to-1st crossing within an
# octave, so its product threshold sits above 5 instead of below it.
THRESHOLD_RIGHT = 4.5
THRESHOLD_LEFT = 5.5


def is_crossing(hand: Hand, d_sign: int, f_prev: int, f_next: int) -> bool:
    """Whether a single-tone step makes the fingers cross over each other."""
    swing = d_sign * (f_next - f_prev)
    return swing < 0 if hand is Hand.RIGHT else swing > 0


def _is_candidate_step(token: PitchDiffToken, prev: PitchDiffToken | None) -> bool:
    # the rules only speak about within-octave steps between isolated tones
    return (prev is not None and prev.is_single_tone and token.is_single_tone
            and not token.is_leap and token.d != 0)


def decision(hand: Hand, token: PitchDiffToken, prev: PitchDiffToken | None,
             f_prev: int, f_next: int) -> int:
    """Hard feasibility verdict for one step: 1 = playable, 0 = forbidden.

    Uses the per-hand product threshold (the left hand gets the relaxed
    one).  Anything outside the within-octave single-tone case is
    unconstrained and returns 1.
    """
    if not 1 <= f_prev <= 5 or not 1 <= f_next <= 5:
        raise ValueError(f"fingers must be 1..5, got {f_prev}->{f_next}")
    if not _is_candidate_step(token, prev):
        return 1
    if not is_crossing(hand, token.direction, f_prev, f_next):
        return 1
    threshold = THRESHOLD_RIGHT if hand is Hand.RIGHT else THRESHOLD_LEFT
    return 0 if f_prev * f_next > threshold else 1


def infeasible_step(hand: Hand, token: PitchDiffToken, prev: PitchDiffToken | None,
                    f_prev: int, f_next: int) -> int:
    """Strict-threshold flag: 1 when the step is an unplayable crossing.

    Both hands are held to the 4.5 product threshold here, which is what
    the evaluation indicator counts; see :func:`decision` for the
    relaxed per-hand verdict the recurrence masking uses.
    """
    if not _is_candidate_step(token, prev):
        return 0
    if not is_crossing(hand, token.direction, f_prev, f_next):
        return 0
    return 1 if f_prev * f_next > THRESHOLD_RIGHT else 0


def feasibility_table(hand: Hand, ascending: bool, strict: bool = False) -> np.ndarray:
    """(5, 5) boolean table from the closed form; True = transition allowed."""
    if strict:
        threshold = THRESHOLD_RIGHT
    else:
        threshold = THRESHOLD_RIGHT if hand is Hand.RIGHT else THRESHOLD_LEFT
    d_sign = 1 if ascending else -1
    table = np.ones((5, 5), dtype=bool)
    for f_prev in range(1, 6):
        for f_next in range(1, 6):
            if is_crossing(hand, d_sign, f_prev, f_next) and f_prev * f_next > threshold:
                table[f_prev - 1, f_next - 1] = False
    return table


def literal_table(hand: Hand, ascending: bool) -> np.ndarray:
    """The transcribed tables: descending-right literal, the rest mirrored."""
    if hand is Hand.RIGHT:
        return TABLE_RIGHT_DESC.T.copy() if ascending else TABLE_RIGHT_DESC.copy()
    if ascending:
        # same grid as right-hand descending, plus the relaxed 1->5 crossing
        table = TABLE_RIGHT_DESC.copy()
        table[0, 4] = True
        return table
    table = TABLE_RIGHT_DESC.T.copy()
    table[4, 0] = True
    return table


def audit() -> list[str]:
    """Cells where the closed form and the literal tables disagree (expect none)."""
    problems = []
    for hand in (Hand.RIGHT, Hand.LEFT):
        for ascending in (True, False):
            closed = feasibility_table(hand, ascending)
            literal = literal_table(hand, ascending)
            for i in range(5):
                for j in range(5):
                    if closed[i, j] != literal[i, j]:
                        word = "ascending" if ascending else "descending"
                        problems.append(
                            f"{hand.name.lower()} {word} {i + 1}->{j + 1}: "
                            f"closed form {int(closed[i, j])}, table {int(literal[i, j])}"
                        )
    return problems


def render_tables() -> str:
    """Human-readable dump of all four tables for the CLI check mode."""
    lines = []
    for hand in (Hand.RIGHT, Hand.LEFT):
        for ascending in (True, False):
            word = "ascending" if ascending else "descending"
            lines.append(f"{hand.name.lower()} hand, {word} (rows: previous finger)")
            table = feasibility_table(hand, ascending)
            lines.append("     " + "  ".join(str(j) for j in range(1, 6)))
            for i in range(5):
                cells = "  ".join("+" if table[i, j] else "x" for j in range(5))
                lines.append(f"  {i + 1}  {cells}")
            lines.append("")
    return "\n".join(lines)


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def pruned_forward(lam: np.ndarray, tokens: list[PitchDiffToken], hand: Hand,
                   up: np.ndarray, down: np.ndarray):
    """Constrained recurrence plus greedy playable decoding in one pass.

    Returns ``(yhat, fingers)``: the per-position label distributions of
    the masked recurrence, and the decoded 1-based fingers.  The decoded
    sequence never contains a strict-threshold crossing.
    """
    T = lam.shape[0]
    if T != len(tokens):
        raise NumericError(f"{T} score rows but {len(tokens)} tokens")
    sel = selector_codes(tokens)
    yhat = np.empty((T, 5))
    fingers = np.empty(T, dtype=np.int64)
    carrier = None
    for t in range(T):
        if t == 0 or sel[t] == SEL_NONE:
            z = lam[t]
        else:
            w = up if sel[t] == SEL_UP else down
            mask = feasibility_table(hand, ascending=tokens[t].d > 0)
            z = lam[t] + (np.where(mask, w, 0.0)).T @ carrier
        p = _softmax(z)
        yhat[t] = p
        q = p
        if t > 0 and sel[t] != SEL_NONE:
            strict = feasibility_table(hand, ascending=tokens[t].d > 0, strict=True)
            row = strict[fingers[t - 1] - 1]
            q = p * row
            total = q.sum()
            if total <= 0.0:
                # unreachable: a repeated finger is never a crossing
                raise NumericError(f"pruning removed every successor finger at step {t}")
            q = q / total
        fingers[t] = int(np.argmax(q)) + 1
        carrier = q
    return yhat, fingers


def decode_playable(lam: np.ndarray, tokens: list[PitchDiffToken], hand: Hand,
                    up: np.ndarray, down: np.ndarray) -> np.ndarray:
    """Finger sequence (1-based) from scores under full feasibility pruning."""
    _, fingers = pruned_forward(lam, tokens, hand, up, down)
    return fingers
