from __future__ import annotations

import numpy as np
import pytest

import metric_fixtures
from metric_fixtures import group_for, piece, pred
from pdfinger.encode import compute_pd
from pdfinger.errors import DataError
from pdfinger.metrics import (
    ScoreGroup,
    evaluate,
    flag_steps,
    ifr,
    m_gen,
    m_high,
    matching_rate,
    report_table,
    report_text,
)
from pdfinger.pig import Hand


@pytest.mark.parametrize("fixture", metric_fixtures.FIXTURES,
                         ids=lambda f: f.__name__.removeprefix("fx_"))
def test_hand_computed_fixture(fixture):
    computed, expected = fixture()
    assert abs(computed - expected) < 1e-12


def test_matching_rate_rejects_length_mismatch():
    gold = piece("s", "1", right=[(60, 1), (62, 2)])
    with pytest.raises(DataError, match="notes but"):
        matching_rate(gold, pred(right=[1]))


def test_matching_rate_rejects_empty_piece():
    with pytest.raises(DataError, match="no notes"):
        matching_rate(piece("s", "1"), pred())


def test_mean_helpers_reject_empty():
    with pytest.raises(DataError):
        m_gen([])
    with pytest.raises(DataError):
        m_high([[0.5], []])


def test_flag_steps_values_and_validation():
    tokens = compute_pd(metric_fixtures.hand_notes(
        [(60, 1), (62, 1), (64, 1)], Hand.RIGHT))
    assert flag_steps(Hand.RIGHT, tokens, np.array([3, 1, 2])) == [0, 0]
    assert flag_steps(Hand.RIGHT, tokens, np.array([4, 2, 3])) == [1, 0]
    assert flag_steps(Hand.RIGHT, tokens[:1], np.array([1])) == []
    with pytest.raises(DataError):
        flag_steps(Hand.RIGHT, tokens, np.array([1, 2]))


def test_evaluate_counts_and_report_lines():
    gold = piece("s", "1", right=[(60, 1), (62, 2), (64, 3)])
    report = evaluate([group_for(gold, pred(right=[4, 2, 2]))])
    assert report.psi_counts == {"s": 1}
    assert report.s_counts == {"s": 0}
    assert report.note_counts == {"s": 3}
    assert report.threshold_disagreements == 0
    text = report_text(report)
    assert "ifr: 0.333333" in text
    assert "flagged_steps: 1" in text
    assert "alpha: s 1 0.333333" in text
    table = report_table(report)
    assert "score" in table and "m_gen" in table
    assert "relaxed left-hand rule" not in table


def test_threshold_disagreement_counted_and_reported():
    # left-hand 5->1 descent: strict flag fires, relaxed verdict allows it
    gold = piece("s", "1", left=[(50, 5), (48, 1)])
    report = evaluate([group_for(gold, pred(left=[5, 1]))])
    assert report.psi_counts == {"s": 1}
    assert report.threshold_disagreements == 1
    assert abs(report.ifr - 0.0) < 1e-12  # gold uses the same pair, s discounts it
    assert "relaxed left-hand rule" in report_table(report)


def test_ifr_shortcut_matches_report():
    gold = piece("s", "1", right=[(60, 1), (62, 2), (64, 3)])
    groups = [group_for(gold, pred(right=[4, 2, 2]))]
    assert ifr(groups) == evaluate(groups).ifr


def test_zero_note_group_contributes_zero_rate():
    gold = piece("s", "1", right=[(60, 1), (62, 2)])
    good = group_for(gold, pred(right=[1, 2]))
    empty = ScoreGroup("t", {}, {}, [(gold, pred(right=[1, 2]))])
    report = evaluate([good, empty])
    assert report.ifr == 0.0
