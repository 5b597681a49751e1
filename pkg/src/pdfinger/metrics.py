"""Evaluation measures for predicted fingerings.

A score can carry several ground-truth annotations; one shared
prediction per score is compared against each of them.  The match-rate
family averages per-pair agreement; the infeasibility rate counts
predicted steps that the strict crossing rule flags as unplayable,
discounting flagged steps that a ground truth also contains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rules
from .encode import PitchDiffToken
from .errors import DataError
from .pig import Hand, Piece

HANDS = (Hand.RIGHT, Hand.LEFT)


def matching_rate(gold: Piece, pred: dict[Hand, np.ndarray]) -> float:
    """Fraction of notes (both hands pooled) whose predicted finger agrees."""
    total = 0
    wrong = 0
    for hand in HANDS:
        notes = gold.hand_notes(hand)
        labels = pred.get(hand)
        if labels is None:
            labels = np.zeros(0, dtype=np.int64)
        if len(notes) != len(labels):
            raise DataError(
                f"{gold.score_id}-{gold.annotator_id}: {len(notes)} {hand.name.lower()}-hand "
                f"notes but {len(labels)} predicted fingers"
            )
        total += len(notes)
        wrong += sum(1 for note, f in zip(notes, labels) if abs(note.finger) != f)
    if total == 0:
        raise DataError(f"{gold.score_id}-{gold.annotator_id} has no notes")
    return 1.0 - wrong / total


def m_gen(alphas: list[float]) -> float:
    """Mean agreement over every (prediction, ground truth) pair."""
    if not alphas:
        raise DataError("no (prediction, ground truth) pairs to average")
    return float(np.mean(alphas))


def m_high(alpha_groups: list[list[float]]) -> float:
    """Mean over scores of the best agreement among that score's ground truths."""
    if not alpha_groups or any(not g for g in alpha_groups):
        raise DataError("every score needs at least one ground truth")
    return float(np.mean([max(g) for g in alpha_groups]))


def psi(hand: Hand, token: PitchDiffToken, prev: PitchDiffToken | None,
        f_prev: int, f_next: int) -> int:
    """Unplayable-crossing indicator for one predicted step (strict threshold)."""
    return rules.infeasible_step(hand, token, prev, f_prev, f_next)


def flag_steps(hand: Hand, tokens: list[PitchDiffToken], fingers: np.ndarray) -> list[int]:
    """Per-step psi values for positions 2..n of one hand (empty if n < 2)."""
    if len(tokens) != len(fingers):
        raise DataError(f"{len(tokens)} tokens but {len(fingers)} fingers")
    flags = []
    for t in range(1, len(tokens)):
        flags.append(psi(hand, tokens[t], tokens[t - 1],
                         int(fingers[t - 1]), int(fingers[t])))
    return flags


@dataclass
class ScoreGroup:
    """One score's shared prediction plus every ground truth it is judged against.

    ``pairs`` aligns each annotator piece with the prediction compared to
    it; normally that is ``canonical`` itself, but a piece whose note
    sequence diverges gets its own re-predicted labels.
    """

    score_id: str
    canonical: dict[Hand, np.ndarray]
    canonical_tokens: dict[Hand, list[PitchDiffToken]]
    pairs: list[tuple[Piece, dict[Hand, np.ndarray]]]


@dataclass
class PieceAlpha:
    score_id: str
    annotator_id: str
    alpha: float


@dataclass
class EvalReport:
    per_piece: list[PieceAlpha]
    m_gen: float
    m_high: float
    ifr: float
    s_counts: dict[str, int] = field(default_factory=dict)
    psi_counts: dict[str, int] = field(default_factory=dict)
    note_counts: dict[str, int] = field(default_factory=dict)
    # predicted steps the strict flag forbids but the per-hand verdict allows
    threshold_disagreements: int = 0


def _hand_lengths(piece: Piece) -> dict[Hand, int]:
    return {hand: len(piece.hand_notes(hand)) for hand in HANDS}


def _gold_fingers(piece: Piece, hand: Hand) -> np.ndarray:
    return np.array([abs(n.finger) for n in piece.hand_notes(hand)], dtype=np.int64)


def evaluate(groups: list[ScoreGroup]) -> EvalReport:
    """Full report over a collection of scored predictions."""
    per_piece = []
    alpha_groups = []
    s_counts = {}
    psi_counts = {}
    note_counts = {}
    ratios = []
    disagreements = 0
    for group in groups:
        alphas = []
        for piece, pred in group.pairs:
            alphas.append(matching_rate(piece, pred))
            per_piece.append(PieceAlpha(group.score_id, piece.annotator_id, alphas[-1]))
        alpha_groups.append(alphas)

        n_i = sum(len(v) for v in group.canonical.values())
        flags = {}
        total_flags = 0
        for hand in HANDS:
            tokens = group.canonical_tokens.get(hand, [])
            fingers = group.canonical.get(hand, np.zeros(0, dtype=np.int64))
            flags[hand] = flag_steps(hand, tokens, fingers) if len(tokens) else []
            total_flags += sum(flags[hand])
            for t in range(1, len(tokens)):
                if flags[hand][t - 1] and rules.decision(hand, tokens[t], tokens[t - 1],
                                                         int(fingers[t - 1]), int(fingers[t])):
                    disagreements += 1

        # discount flagged steps the nearest ground truth also uses
        s_i = 0
        canonical_lengths = {hand: len(group.canonical.get(hand, ())) for hand in HANDS}
        comparable = [(a, piece) for a, (piece, _) in zip(alphas, group.pairs)
                      if _hand_lengths(piece) == canonical_lengths]
        if comparable and total_flags:
            best = max(comparable, key=lambda item: item[0])[1]
            for hand in HANDS:
                gold = _gold_fingers(best, hand)
                fingers = group.canonical.get(hand, np.zeros(0, dtype=np.int64))
                for t in range(1, len(fingers)):
                    if flags[hand][t - 1] and gold[t - 1] == fingers[t - 1] and gold[t] == fingers[t]:
                        s_i += 1
        s_counts[group.score_id] = s_i
        psi_counts[group.score_id] = total_flags
        note_counts[group.score_id] = n_i
        ratios.append((total_flags - s_i) / n_i if n_i else 0.0)

    flat = [a for g in alpha_groups for a in g]
    return EvalReport(
        per_piece=per_piece,
        m_gen=m_gen(flat),
        m_high=m_high(alpha_groups),
        ifr=float(np.mean(ratios)) if ratios else 0.0,
        s_counts=s_counts,
        psi_counts=psi_counts,
        note_counts=note_counts,
        threshold_disagreements=disagreements,
    )


def ifr(groups: list[ScoreGroup]) -> float:
    """Mean per-score rate of net flagged steps; 0 when nothing is flagged."""
    return evaluate(groups).ifr


def report_text(report: EvalReport) -> str:
    """Structured key: value emission, one datum per line."""
    lines = [
        f"m_gen: {report.m_gen:.6f}",
        f"m_high: {report.m_high:.6f}",
        f"ifr: {report.ifr:.6f}",
        f"scores: {len(report.s_counts)}",
        f"pairs: {len(report.per_piece)}",
        f"flagged_steps: {sum(report.psi_counts.values())}",
        f"discounted_steps: {sum(report.s_counts.values())}",
        f"threshold_disagreements: {report.threshold_disagreements}",
    ]
    for entry in report.per_piece:
        lines.append(f"alpha: {entry.score_id} {entry.annotator_id} {entry.alpha:.6f}")
    return "\n".join(lines)


def report_table(report: EvalReport) -> str:
    """Aligned human-readable table of per-pair agreement plus the summary."""
    rows = [("score", "annotator", "alpha")]
    for entry in report.per_piece:
        rows.append((entry.score_id, entry.annotator_id, f"{entry.alpha:.4f}"))
    widths = [max(len(r[c]) for r in rows) for c in range(3)]
    lines = ["  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)) for row in rows]
    lines.append("")
    lines.append(f"m_gen {report.m_gen:.4f}  m_high {report.m_high:.4f}  ifr {report.ifr:.4f}")
    if report.threshold_disagreements:
        lines.append(f"note: {report.threshold_disagreements} flagged step(s) are allowed "
                     "by the relaxed left-hand rule")
    return "\n".join(lines)
