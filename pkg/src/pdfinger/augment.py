"""Synthetic training data sampled from corpus fingering statistics.

One hand's corpus is reduced to events (a chord counts as one event) and
to transition statistics between consecutive events: which finger leads
to which, under what kind of move, and with what pitch-difference
pattern.  Sampling those statistics with the crossing rules masked out
yields playable (pitch-difference, finger) sequences that extend the
training set without touching validation or test material.

Observations next to a leap are dropped: their fingering depends on how
the hand relocated, which a first-order statistic cannot carry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encode import PitchDiffToken, compute_pd
from .errors import DataError
from .pig import Hand, NoteEvent, Piece, save_pig_file
from .rules import feasibility_table

KIND_SINGLE_UP = "single_up"
KIND_SINGLE_DOWN = "single_down"
KIND_SINGLE_LEVEL = "single_level"
KIND_HARMONY = "harmony"
KIND_TRIAD = "triad"
KIND_SEVENTH = "seventh"

MIDI_LOW, MIDI_HIGH = 21, 108  # piano compass
START_MIDI = {Hand.RIGHT: 72, Hand.LEFT: 48}
EVENT_SPACING = 0.5
MAX_REDRAWS = 60
EVENT_LENGTH = 0.45


@dataclass(frozen=True)
class EventPattern:
    """One observed continuation: coded values and fingers for a whole event."""

    ds: tuple[int, ...]
    raws: tuple[int, ...]
    fingers: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.ds)


@dataclass
class AugmentStats:
    """Sampling tables for one hand."""

    hand: Hand
    threshold: float
    finger_freq: dict[int, float] = field(default_factory=dict)
    transition_counts: dict[tuple[int, int, str], int] = field(default_factory=dict)
    pd_by_transition: dict[tuple[int, int, str], list[tuple[EventPattern, float]]] = field(
        default_factory=dict)


def _event_kind(size: int, first_d: int) -> str:
    if size == 1:
        if first_d > 0:
            return KIND_SINGLE_UP
        if first_d < 0:
            return KIND_SINGLE_DOWN
        return KIND_SINGLE_LEVEL
    if size == 2:
        return KIND_HARMONY
    if size == 3:
        return KIND_TRIAD
    return KIND_SEVENTH


def _anchor_index(hand: Hand, size: int) -> int:
    # thumb-side reference: lowest note right hand, highest note left hand
    return 0 if hand is Hand.RIGHT else size - 1


def _events(notes: list[NoteEvent], tokens: list[PitchDiffToken]):
    """Split a hand sequence into (slice, tokens) event groups by shared onset."""
    groups = []
    i = 0
    while i < len(notes):
        j = i
        while j < len(notes) and notes[j].onset == notes[i].onset:
            j += 1
        groups.append((notes[i:j], tokens[i:j]))
        i = j
    return groups


def collect_stats(pieces: list[Piece], hand: Hand, threshold: float = 0.05) -> AugmentStats:
    """Transition and pitch-difference tables from one hand of a corpus."""
    if not pieces:
        raise DataError("cannot collect augmentation statistics from an empty corpus")
    finger_counts: dict[int, int] = {}
    cell_counts: dict[tuple[int, int, str], int] = {}
    cell_patterns: dict[tuple[int, int, str], dict[EventPattern, int]] = {}
    for piece in pieces:
        notes = piece.hand_notes(hand)
        if not notes:
            continue
        groups = _events(notes, compute_pd(notes))
        for idx, (evs, toks) in enumerate(groups):
            anchor = abs(evs[_anchor_index(hand, len(evs))].finger)
            finger_counts[anchor] = finger_counts.get(anchor, 0) + 1
            if idx == 0:
                continue
            has_leap = any(t.is_leap for t in toks)
            prev_evs, prev_toks = groups[idx - 1]
            if has_leap or any(t.is_leap for t in prev_toks):
                continue  # relocation context: dropped
            kind = _event_kind(len(evs), toks[0].d)
            f_prev = abs(prev_evs[_anchor_index(hand, len(prev_evs))].finger)
            f_next = anchor
            if kind in (KIND_SINGLE_UP, KIND_SINGLE_DOWN):
                table = feasibility_table(hand, ascending=kind == KIND_SINGLE_UP, strict=True)
                if not table[f_prev - 1, f_next - 1]:
                    continue  # forbidden cell stays at probability zero
            pattern = EventPattern(ds=tuple(t.d for t in toks),
                                   raws=tuple(t.raw_diff for t in toks),
                                   fingers=tuple(abs(e.finger) for e in evs))
            key = (f_prev, f_next, kind)
            cell_counts[key] = cell_counts.get(key, 0) + 1
            bucket = cell_patterns.setdefault(key, {})
            bucket[pattern] = bucket.get(pattern, 0) + 1

    stats = AugmentStats(hand=hand, threshold=threshold)
    total_fingers = sum(finger_counts.values())
    if total_fingers == 0:
        raise DataError(f"no {hand.name.lower()}-hand events in the corpus")
    stats.finger_freq = {f: c / total_fingers for f, c in sorted(finger_counts.items())}
    for key in sorted(cell_patterns):
        total = cell_counts[key]
        kept = [(p, c / total) for p, c in sorted(cell_patterns[key].items(),
                                                  key=lambda item: (item[0].ds, item[0].fingers))
                if c / total > threshold]
        if not kept:
            continue
        norm = sum(p for _, p in kept)
        stats.pd_by_transition[key] = [(pat, p / norm) for pat, p in kept]
        stats.transition_counts[key] = total
    if not stats.pd_by_transition:
        raise DataError(f"no usable {hand.name.lower()}-hand transitions survived thresholding")
    return stats


def _options_from(stats: AugmentStats, f_prev: int):
    """Sampleable (key, patterns) cells leaving ``f_prev``, in fixed order."""
    return [(key, stats.pd_by_transition[key])
            for key in sorted(stats.transition_counts)
            if key[0] == f_prev and key in stats.pd_by_transition]


def _start_token() -> PitchDiffToken:
    return PitchDiffToken(d=0, raw_diff=0, n=0, is_leap=False, direction=0)


def _pattern_tokens(pattern: EventPattern) -> list[PitchDiffToken]:
    n = pattern.size - 1
    out = []
    for d, raw in zip(pattern.ds, pattern.raws):
        direction = (raw > 0) - (raw < 0)
        out.append(PitchDiffToken(d=d, raw_diff=raw, n=n, is_leap=False, direction=direction))
    return out


@dataclass
class GeneratedSequence:
    """One synthetic hand sequence: aligned tokens, fingers, realized pitches."""

    tokens: list[PitchDiffToken]
    fingers: list[int]
    midis: list[int]
    onsets: list[float]


def generate(stats: AugmentStats, count: int = 50,
             length_range: tuple[int, int] = (150, 300), seed: int = 0) -> list[GeneratedSequence]:
    """Sample ``count`` playable sequences with note counts inside ``length_range``."""
    rng = np.random.default_rng(seed)
    low, high = length_range
    max_size = max(p.size for cell in stats.pd_by_transition.values() for p, _ in cell)
    if low > high or high - max_size + 1 < low:
        raise DataError(f"length range {length_range} cannot hold events of size {max_size}")
    # flatten each finger's continuations once; per step only the range filter runs
    flat_options: dict[int, list[tuple[tuple[int, int, str], EventPattern, float]]] = {}
    for f in range(1, 6):
        flat = []
        for key, cell in _options_from(stats, f):
            weight = stats.transition_counts[key]
            for pattern, p in cell:
                flat.append((key, pattern, weight * p))
        if flat:
            flat_options[f] = flat
    start_fingers = sorted(f for f in stats.finger_freq if f in flat_options)
    if not start_fingers:
        raise DataError("no starting finger has an outgoing transition")
    start_probs = np.array([stats.finger_freq[f] for f in start_fingers])
    start_probs /= start_probs.sum()

    def draw_one() -> GeneratedSequence:
        target = int(rng.integers(low, high - max_size + 2))
        f = int(rng.choice(start_fingers, p=start_probs))
        midi = START_MIDI[stats.hand]
        seq = GeneratedSequence(tokens=[_start_token()], fingers=[f], midis=[midi], onsets=[0.0])
        event_idx = 0
        while len(seq.tokens) < target:
            event_idx += 1
            if f not in flat_options:
                raise DataError(f"dead end: finger {f} has no outgoing transition")
            flat = []
            for key, pattern, w in flat_options[f]:
                # drop continuations that would walk off the keyboard
                lo = hi = 0
                acc = 0
                for raw in pattern.raws:
                    acc += raw
                    lo = min(lo, acc)
                    hi = max(hi, acc)
                if midi + lo < MIDI_LOW or midi + hi > MIDI_HIGH:
                    continue
                flat.append((key, pattern, w))
            if not flat:
                raise DataError(f"dead end: finger {f} at pitch {midi} cannot continue")
            weights = np.array([w for _, _, w in flat])
            pick = int(rng.choice(len(flat), p=weights / weights.sum()))
            key, pattern, _ = flat[pick]
            onset = event_idx * EVENT_SPACING
            for token, finger, raw in zip(_pattern_tokens(pattern), pattern.fingers, pattern.raws):
                midi += int(raw)
                seq.tokens.append(token)
                seq.fingers.append(int(finger))
                seq.midis.append(midi)
                seq.onsets.append(onset)
            f = key[1]
        return seq

    sequences = []
    for _ in range(count):
        # a sparse table can strand a walk at the keyboard edge; redraw a few times
        for attempt in range(MAX_REDRAWS):
            try:
                sequences.append(draw_one())
                break
            except DataError:
                if attempt == MAX_REDRAWS - 1:
                    raise
    return sequences


def sequence_piece(right: GeneratedSequence, left: GeneratedSequence, score_id: str) -> Piece:
    """Pack one generated sequence per hand into a two-channel piece."""
    piece = Piece(score_id=score_id, annotator_id="1")
    records = []
    for hand, seq in ((Hand.RIGHT, right), (Hand.LEFT, left)):
        for onset, midi, finger in zip(seq.onsets, seq.midis, seq.fingers):
            records.append((onset, 0 if hand is Hand.RIGHT else 1, midi, hand, finger))
    records.sort(key=lambda r: (r[0], r[1], r[2]))
    for note_id, (onset, _, midi, hand, finger) in enumerate(records):
        note = NoteEvent(note_id=note_id, onset=onset, offset=onset + EVENT_LENGTH,
                         midi=midi, hand=hand, finger=finger)
        (piece.right if hand is Hand.RIGHT else piece.left).append(note)
    return piece


def write_augmented(right_seqs: list[GeneratedSequence], left_seqs: list[GeneratedSequence],
                    out_dir: str | Path, stats_note: dict | None = None) -> list[Path]:
    """Dump paired sequences as PIG files plus a sidecar stats summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if len(right_seqs) != len(left_seqs):
        raise DataError(f"{len(right_seqs)} right vs {len(left_seqs)} left sequences")
    paths = []
    for i, (r, l) in enumerate(zip(right_seqs, left_seqs)):
        piece = sequence_piece(r, l, f"aug-{i:03d}")
        path = out / f"aug-{i:03d}-1_fingering.txt"
        save_pig_file(piece, path)
        paths.append(path)
    if stats_note is not None:
        (out / "aug-stats.json").write_text(json.dumps(stats_note, indent=2, sort_keys=True))
    return paths


def stats_summary(stats: AugmentStats) -> dict:
    """JSON-friendly digest of the sampling tables (for the sidecar dump)."""
    return {
        "hand": stats.hand.name.lower(),
        "threshold": stats.threshold,
        "finger_freq": {str(f): p for f, p in stats.finger_freq.items()},
        "cells": {
            f"{k[0]}->{k[1]}:{k[2]}": {
                "count": stats.transition_counts[k],
                "patterns": len(stats.pd_by_transition[k]),
            }
            for k in sorted(stats.pd_by_transition)
        },
    }
