"""Pitch-difference token encoding.

A hand's note sequence (chords flattened low-to-high) becomes one token per
note.  The coded value combines three things: the semitone step from the
previous note, a chord-simultaneity tag (+100 per simultaneous neighbour),
and a clamp that maps steps of an octave or more to +-80, keeping only the
direction.  The first note of a sequence carries ``n * 100`` alone.

Tokens keep the raw step, the simultaneity count, the leap flag and the
step direction so downstream layers can select transition constraints
without re-deriving them from pitches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .pig import NoteEvent

LEAP_SEMITONES = 12
LEAP_CODE = 80
CHORD_TAG = 100


@dataclass(frozen=True)
class PitchDiffToken:
    """One coded pitch-difference value with its derivation facts."""

    d: int
    raw_diff: int
    n: int
    is_leap: bool
    direction: int

    @property
    def is_single_tone(self) -> bool:
        return self.n == 0


def simultaneity_counts(midis: list[int], onsets: list[float]) -> list[int]:
    """Per note: how many *other* same-hand notes share its onset (0 for single tones)."""
    counts = []
    i = 0
    while i < len(onsets):
        j = i
        while j < len(onsets) and onsets[j] == onsets[i]:
            j += 1
        counts.extend([j - i - 1] * (j - i))
        i = j
    return counts


def compute_pd(notes: list[NoteEvent]) -> list[PitchDiffToken]:
    """Encode a sorted hand sequence into pitch-difference tokens, one per note."""
    if not notes:
        raise DataError("cannot encode an empty note sequence")
    onsets = [e.onset for e in notes]
    midis = [e.midi for e in notes]
    counts = simultaneity_counts(midis, onsets)

    tokens = [PitchDiffToken(d=counts[0] * CHORD_TAG, raw_diff=0, n=counts[0], is_leap=False, direction=0)]
    for t in range(1, len(notes)):
        raw = midis[t] - midis[t - 1]
        direction = (raw > 0) - (raw < 0)
        n = counts[t]
        if abs(raw) >= LEAP_SEMITONES:
            token = PitchDiffToken(d=LEAP_CODE * direction, raw_diff=raw, n=n, is_leap=True, direction=direction)
        else:
            token = PitchDiffToken(d=raw + n * CHORD_TAG, raw_diff=raw, n=n, is_leap=False, direction=direction)
        tokens.append(token)
    return tokens


class Vocabulary:
    """Bijection between observed integer codes and dense ids, plus an UNKNOWN id.

    Ids follow ascending code order; the UNKNOWN id comes last so the
    one-hot width is ``len(values) + 1``.
    """

    def __init__(self, values):
        self.values = sorted(set(int(v) for v in values))
        self._index = {v: i for i, v in enumerate(self.values)}
        self.unknown_id = len(self.values)

    @property
    def size(self) -> int:
        return len(self.values) + 1

    def id_of(self, value: int) -> int:
        return self._index.get(int(value), self.unknown_id)

    def ids(self, values) -> np.ndarray:
        return np.array([self.id_of(v) for v in values], dtype=np.int64)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.values == other.values

    def __len__(self):
        return self.size

    def dump(self) -> str:
        """Two-column text: code value, dense id (UNKNOWN last)."""
        lines = [f"{v}\t{i}" for i, v in enumerate(self.values)]
        lines.append(f"UNKNOWN\t{self.unknown_id}")
        return "\n".join(lines) + "\n"


def build_vocab(token_sequences) -> Vocabulary:
    """Vocabulary over the distinct coded values of the training sequences."""
    sequences = list(token_sequences)
    if not sequences:
        raise DataError("cannot build a vocabulary from zero sequences")
    values = set()
    for seq in sequences:
        for tok in seq:
            values.add(tok.d if isinstance(tok, PitchDiffToken) else int(tok))
    return Vocabulary(values)


def encode(token, vocab: Vocabulary) -> np.ndarray:
    """One-hot vector for a token (or bare code); unseen codes hit the UNKNOWN slot."""
    value = token.d if isinstance(token, PitchDiffToken) else int(token)
    vec = np.zeros(vocab.size)
    vec[vocab.id_of(value)] = 1.0
    return vec


def token_ids(tokens: list[PitchDiffToken], vocab: Vocabulary) -> np.ndarray:
    return vocab.ids([tok.d for tok in tokens])


def raw_note_ids(notes: list[NoteEvent], vocab: Vocabulary) -> np.ndarray:
    """Input ids for the raw-note ablation: one id per MIDI number."""
    return vocab.ids([e.midi for e in notes])


def hand_statistics(hand_sequences: list[list[NoteEvent]]) -> dict:
    """Corpus compression numbers for one hand.

    ``raw_combinations`` counts distinct onset-simultaneous pitch groups
    (single pitches and chord pitch sets); ``distinct_codes`` counts the
    pitch-difference values those same notes encode to.
    """
    combos = set()
    codes = set()
    for notes in hand_sequences:
        if not notes:
            continue
        i = 0
        while i < len(notes):
            j = i
            while j < len(notes) and notes[j].onset == notes[i].onset:
                j += 1
            combos.add(tuple(e.midi for e in notes[i:j]))
            i = j
        for tok in compute_pd(notes):
            codes.add(tok.d)
    return {"raw_combinations": len(combos), "distinct_codes": len(codes)}
