"""Reading and writing fingering files in the PIG text format.

A PIG file is UTF-8 text with optional ``//`` comment lines followed by one
tab-separated record per note::

    note_id  onset  offset  spelled_pitch  onset_vel  offset_vel  channel  finger

Channel 0 is the right hand, channel 1 the left.  Finger text may be signed
(``-3`` for left hand) and may carry a substitution suffix (``3_1`` = strike
with 3, silently swap to 1); substitutions are normalized to the striking
finger and recorded in the parse diagnostics.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import DataError, PigParseError

NATURAL_SEMITONE = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
SHARP_NAMES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]

_PITCH_RE = re.compile(r"^([A-G])(##|bb|#|b)?(-?\d+)$")
_FINGER_RE = re.compile(r"^(-?[0-9])(?:_(-?[0-9]))?$")
_FILENAME_RE = re.compile(r"^(\d+)-(\d+)_fingering$")


class Hand(enum.Enum):
    RIGHT = "right"
    LEFT = "left"


@dataclass(frozen=True)
class NoteEvent:
    """One played note with its fingering label."""

    note_id: int
    onset: float
    offset: float
    midi: int
    hand: Hand
    finger: int
    on_vel: int = 80
    off_vel: int = 80

    def __post_init__(self):
        if self.offset < self.onset:
            raise DataError(f"note {self.note_id}: offset {self.offset} before onset {self.onset}")
        if not 0 <= self.midi <= 127:
            raise DataError(f"note {self.note_id}: midi {self.midi} out of range")
        if self.finger not in (1, 2, 3, 4, 5):
            raise DataError(f"note {self.note_id}: finger {self.finger} out of range")


@dataclass
class Piece:
    """Hand-separated, time-ordered note sequences of one annotated score."""

    score_id: str = ""
    annotator_id: str = ""
    left: list[NoteEvent] = field(default_factory=list)
    right: list[NoteEvent] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list, compare=False)

    def hand_notes(self, hand: Hand) -> list[NoteEvent]:
        return self.right if hand is Hand.RIGHT else self.left

    @property
    def note_count(self) -> int:
        return len(self.left) + len(self.right)


def spelled_to_midi(name: str) -> int:
    """Convert a spelled pitch like ``C4``, ``F#3`` or ``Bb5`` to a MIDI number.

    C4 = 60; ``#``/``##`` raise and ``b``/``bb`` lower by one/two semitones.
    """
    m = _PITCH_RE.match(name)
    if m is None:
        raise DataError(f"unrecognized pitch name {name!r}")
    letter, accidental, octave = m.group(1), m.group(2) or "", int(m.group(3))
    shift = accidental.count("#") - accidental.count("b")
    midi = 12 * (octave + 1) + NATURAL_SEMITONE[letter] + shift
    if not 0 <= midi <= 127:
        raise DataError(f"pitch {name!r} maps to midi {midi}, outside 0-127")
    return midi


def midi_to_spelled(midi: int) -> str:
    """MIDI number to a sharps-based pitch name (used when writing files)."""
    if not 0 <= midi <= 127:
        raise DataError(f"midi {midi} out of range")
    return f"{SHARP_NAMES[midi % 12]}{midi // 12 - 1}"


def _parse_finger(text: str, channel: int, line_no: int, diagnostics: list[str]) -> int:
    m = _FINGER_RE.match(text)
    if m is None:
        raise PigParseError(f"unparsable finger field {text!r}", line_no)
    if m.group(2) is not None:
        # substitution "a_b": keep the striking finger, one label per note
        diagnostics.append(f"line {line_no}: substitution fingering {text!r} normalized to first finger")
    value = int(m.group(1))
    if value == 0 or abs(value) > 5:
        raise PigParseError(f"finger {value} outside 1-5", line_no)
    if value < 0 and channel == 0 or value > 0 and channel == 1:
        diagnostics.append(
            f"line {line_no}: finger sign {text!r} disagrees with channel {channel}; channel taken as authoritative"
        )
    return abs(value)


def parse_pig(text: str, score_id: str = "", annotator_id: str = "") -> Piece:
    """Parse PIG-format text into a :class:`Piece`.

    Events are hand-separated and sorted by (onset, midi); two notes with
    identical onset and pitch in one hand are rejected.  Lossy
    normalizations and sign/channel disagreements are appended to
    ``piece.diagnostics``.
    """
    diagnostics: list[str] = []
    left: list[NoteEvent] = []
    right: list[NoteEvent] = []
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("//"):
            continue
        fields = line.split("\t")
        if len(fields) != 8:
            raise PigParseError(f"expected 8 tab-separated fields, got {len(fields)}", line_no)
        try:
            note_id = int(fields[0])
            onset = float(fields[1])
            offset = float(fields[2])
            on_vel = int(fields[4])
            off_vel = int(fields[5])
            channel = int(fields[6])
        except ValueError as exc:
            raise PigParseError(f"unparsable number: {exc}", line_no) from None
        if note_id < 0:
            raise PigParseError(f"negative note id {note_id}", line_no)
        if channel not in (0, 1):
            raise PigParseError(f"channel {channel} is not 0 (right) or 1 (left)", line_no)
        try:
            midi = spelled_to_midi(fields[3])
        except DataError as exc:
            raise PigParseError(str(exc), line_no) from None
        finger = _parse_finger(fields[7], channel, line_no, diagnostics)
        hand = Hand.RIGHT if channel == 0 else Hand.LEFT
        try:
            event = NoteEvent(note_id, onset, offset, midi, hand, finger, on_vel, off_vel)
        except DataError as exc:
            raise PigParseError(str(exc), line_no) from None
        (right if hand is Hand.RIGHT else left).append(event)

    for events, hand_name in ((left, "left"), (right, "right")):
        events.sort(key=lambda e: (e.onset, e.midi))
        for a, b in zip(events, events[1:]):
            if a.onset == b.onset and a.midi == b.midi:
                raise PigParseError(
                    f"{hand_name} hand: notes {a.note_id} and {b.note_id} share onset {a.onset} and pitch {a.midi}"
                )
    return Piece(score_id, annotator_id, left, right, diagnostics)


def load_pig_file(path: str | Path) -> Piece:
    """Parse one PIG file; score/annotator ids come from the ``SSS-A_fingering.txt`` name."""
    path = Path(path)
    m = _FILENAME_RE.match(path.stem)
    score_id, annotator_id = (m.group(1), m.group(2)) if m else (path.stem, "")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    piece = parse_pig(text, score_id, annotator_id)
    piece.diagnostics = [f"{path.name}: {d}" for d in piece.diagnostics]
    return piece


def load_pig_dir(directory: str | Path) -> list[Piece]:
    """Load every ``*_fingering.txt`` file in a directory, sorted by filename."""
    directory = Path(directory)
    paths = sorted(directory.glob("*_fingering.txt"))
    if not paths:
        raise DataError(f"no *_fingering.txt files found in {directory}")
    return [load_pig_file(p) for p in paths]


def write_pig(piece: Piece) -> str:
    """Serialize a :class:`Piece` back to PIG text.

    Records are emitted in note_id order so a parsed file round-trips with
    its original line order; left-hand fingers are written with the
    conventional minus sign.
    """
    events = sorted(piece.left + piece.right, key=lambda e: (e.note_id, e.onset, e.midi))
    lines = []
    for e in events:
        channel = 0 if e.hand is Hand.RIGHT else 1
        finger = e.finger if e.hand is Hand.RIGHT else -e.finger
        lines.append(
            f"{e.note_id}\t{e.onset!r}\t{e.offset!r}\t{midi_to_spelled(e.midi)}"
            f"\t{e.on_vel}\t{e.off_vel}\t{channel}\t{finger}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def save_pig_file(piece: Piece, path: str | Path) -> None:
    Path(path).write_text(write_pig(piece), encoding="utf-8")


def with_fingers(piece: Piece, fingers: dict[Hand, list[int]]) -> Piece:
    """Copy of ``piece`` with each hand's finger labels replaced in order."""
    out = Piece(piece.score_id, piece.annotator_id, list(piece.left), list(piece.right))
    for hand, labels in fingers.items():
        events = out.hand_notes(hand)
        if len(labels) != len(events):
            raise DataError(
                f"{hand.value} hand: {len(labels)} labels for {len(events)} notes in score {piece.score_id}"
            )
        replaced = [replace(e, finger=int(f)) for e, f in zip(events, labels)]
        if hand is Hand.RIGHT:
            out.right = replaced
        else:
            out.left = replaced
    return out
