"""Deterministic stand-in corpus with the fingering corpus' shape.

Used by dataset-dependent tests when no real corpus directory is
configured.  Scores are assembled from a library of idiomatic keyboard
figures (scale runs with thumb crossings, arpeggios, repeated chords,
double thirds) whose fingerings are playable and context-dependent: the
same pitch-difference value carries different fingers depending on where
in a figure it sits, so a context-free predictor cannot ace it.

Files are written as plain PIG-format text without going through the
package's serializer, keeping the test fixture independent of the code
under test.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

_NAMES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]


def _spell(midi: int) -> str:
    return f"{_NAMES[midi % 12]}{midi // 12 - 1}"


# Each pattern: list of events; an event is (step, intra, fingers_by_variant)
# where step is the semitone interval from the previous note to the event's
# first (lowest) note (None anchors the segment base), intra lists offsets of
# the event's notes above its first note, and fingers align with those notes.
# Variants "2"/"3" fall back to "1" when absent.
_RIGHT_PATTERNS = {
    "run8_asc": {
        "steps": [None, 2, 2, 1, 2, 2, 2, 1],
        "intra": [(0,)] * 8,
        "fingers": {
            "1": [(1,), (2,), (3,), (1,), (2,), (3,), (4,), (5,)],
            "3": [(1,), (2,), (3,), (1,), (2,), (3,), (4,), (1,)],
        },
    },
    "run8_desc": {
        "steps": [None, -1, -2, -2, -2, -1, -2, -2],
        "intra": [(0,)] * 8,
        "fingers": {
            "1": [(5,), (4,), (3,), (2,), (1,), (3,), (2,), (1,)],
            "2": [(5,), (4,), (3,), (2,), (1,), (4,), (3,), (2,)],
        },
    },
    "run5_asc": {
        "steps": [None, 2, 2, 1, 2],
        "intra": [(0,)] * 5,
        "fingers": {
            "1": [(1,), (2,), (3,), (4,), (5,)],
            "2": [(2,), (1,), (2,), (3,), (4,)],
        },
    },
    "run5_desc": {
        "steps": [None, -2, -1, -2, -2],
        "intra": [(0,)] * 5,
        "fingers": {
            "1": [(5,), (4,), (3,), (2,), (1,)],
            "2": [(3,), (2,), (1,), (2,), (1,)],
        },
    },
    "arp_asc": {
        "steps": [None, 4, 3, 5],
        "intra": [(0,)] * 4,
        "fingers": {"1": [(1,), (2,), (3,), (5,)], "2": [(1,), (2,), (4,), (5,)]},
    },
    "arp_desc": {
        "steps": [None, -5, -3, -4],
        "intra": [(0,)] * 4,
        "fingers": {"1": [(5,), (3,), (2,), (1,)], "2": [(5,), (4,), (2,), (1,)]},
    },
    "turn": {
        "steps": [None, 2, -1, -2, 1],
        "intra": [(0,)] * 5,
        "fingers": {"1": [(2,), (3,), (2,), (1,), (2,)]},
    },
    "repeat": {
        "steps": [None, 0, 0],
        "intra": [(0,)] * 3,
        "fingers": {"1": [(3,), (3,), (3,)], "2": [(2,), (2,), (2,)]},
    },
    "triad_rep": {
        "steps": [None, -7],
        "intra": [(0, 4, 7), (0, 4, 7)],
        "fingers": {"1": [(1, 3, 5), (1, 3, 5)], "2": [(1, 2, 5), (1, 2, 5)]},
    },
    "thirds": {
        "steps": [None, -2, -2],
        "intra": [(0, 4), (0, 4), (0, 4)],
        "fingers": {"1": [(1, 3), (2, 4), (1, 3)], "2": [(1, 3), (1, 3), (1, 3)]},
    },
    "sev_rep": {
        "steps": [None, -10],
        "intra": [(0, 3, 7, 10), (0, 3, 7, 10)],
        "fingers": {"1": [(1, 2, 3, 5), (1, 2, 3, 5)], "2": [(1, 2, 4, 5), (1, 2, 4, 5)]},
    },
}

_PATTERN_NAMES = sorted(_RIGHT_PATTERNS)
# runs dominate, figures and chords season the mix
_PATTERN_WEIGHTS = {
    "run8_asc": 4, "run8_desc": 4, "run5_asc": 3, "run5_desc": 3,
    "arp_asc": 2, "arp_desc": 2, "turn": 2, "repeat": 1,
    "triad_rep": 2, "thirds": 2, "sev_rep": 1,
}

_BASE_WINDOW = {"right": (50, 82), "left": (34, 60)}


def _mirror(pattern: dict) -> dict:
    """Left-hand version: intervals negated, chord fingers reversed."""
    out = {
        "steps": [None if s is None else -s for s in pattern["steps"]],
        "intra": pattern["intra"],
        "fingers": {
            variant: [tuple(reversed(f)) if len(f) > 1 else f for f in per_event]
            for variant, per_event in pattern["fingers"].items()
        },
    }
    return out


_LEFT_PATTERNS = {name: _mirror(p) for name, p in _RIGHT_PATTERNS.items()}


def _hand_content(score_idx: int, hand: str):
    """Event list [(midis, fingers_by_variant)] for one hand of one score."""
    rng = np.random.default_rng([9000, score_idx, 0 if hand == "right" else 1])
    patterns = _RIGHT_PATTERNS if hand == "right" else _LEFT_PATTERNS
    names = [n for n in _PATTERN_NAMES for _ in range(_PATTERN_WEIGHTS[n])]
    lo, hi = _BASE_WINDOW[hand]
    events = []
    last_midi = None
    prev_was_chord = False
    for _ in range(int(rng.integers(8, 15))):
        pattern = patterns[names[int(rng.integers(0, len(names)))]]
        base = int(rng.integers(lo, hi + 1))
        if last_midi is not None and not prev_was_chord and len(pattern["intra"][0]) == 1:
            # single-to-single joins must be repeats or leaps so every
            # annotation stays playable under the crossing rules
            while 0 < abs(base - last_midi) < 12:
                base = int(rng.integers(lo, hi + 1))
        midi = base
        for pos, (step, intra) in enumerate(zip(pattern["steps"], pattern["intra"])):
            if pos == 0:
                midi = base
            else:
                midi = midi + step
            midis = tuple(midi + off for off in intra)
            fingers = {}
            for variant in ("1", "2", "3"):
                per_event = pattern["fingers"].get(variant, pattern["fingers"]["1"])
                fingers[variant] = per_event[pos]
            events.append((midis, fingers))
            midi = midis[-1]
            last_midi = midi
            prev_was_chord = len(midis) > 1
    assert last_midi is not None
    return events


def _score_lines(score_idx: int, variant: str) -> list[str]:
    records = []
    for channel, hand in ((0, "right"), (1, "left")):
        for onset_idx, (midis, fingers) in enumerate(_hand_content(score_idx, hand)):
            onset = onset_idx * 0.5
            for midi, finger in zip(midis, fingers[variant]):
                signed = finger if channel == 0 else -finger
                records.append((onset, channel, midi, signed))
    records.sort(key=lambda r: (r[0], r[1], r[2]))
    lines = []
    for note_id, (onset, channel, midi, finger) in enumerate(records):
        lines.append(f"{note_id}\t{onset!r}\t{onset + 0.45!r}\t{_spell(midi)}"
                     f"\t80\t80\t{channel}\t{finger}")
    return lines


def annotators_for(score_idx: int, n_scores: int) -> list[str]:
    """PIG-like shape: 150 scores -> 309 annotations; small sets halve it."""
    if n_scores >= 100:
        extra = ["2"] + (["3"] if score_idx < 9 else [])
    else:
        extra = ["2"] if score_idx % 2 == 0 else []
    return ["1"] + extra


def write_corpus(out_dir: str | Path, n_scores: int) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for idx in range(n_scores):
        for annotator in annotators_for(idx, n_scores):
            path = out / f"{idx:03d}-{annotator}_fingering.txt"
            path.write_text("\n".join(_score_lines(idx, annotator)) + "\n", encoding="utf-8")
    return out
