"""Cross-validation training, annotation, and evaluation orchestration.

Each hand gets its own model; a fold's vocabulary, augmentation
statistics, and synthetic data come only from that fold's training
material.  Every stochastic choice draws from a generator derived from
(config seed, fold, hand, purpose), so a rerun with the same inputs
reproduces checkpoints and reports byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import augment, checkpoint, metrics, rules, transitions
from .config import RunConfig, dump_config
from .encode import PitchDiffToken, Vocabulary, compute_pd
from .errors import DataError, NumericError
from .model import (AdamHyper, AdamState, ModelParams, adam_step, bilstm_forward,
                    clip_gradients, init_params, loss_and_gradients)
from .pig import Hand, Piece, load_pig_dir, save_pig_file, with_fingers

HANDS = (Hand.RIGHT, Hand.LEFT)
HAND_CODE = {Hand.RIGHT: 0, Hand.LEFT: 1}

# rng purpose codes, kept distinct so seeds never collide across uses
_SEED_INIT, _SEED_ORDER, _SEED_AUGMENT, _SEED_SPLIT, _SEED_VAL = 0, 1, 2, 3, 4


def _rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng([seed, *path])


def _derived_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def load_dataset(path: str | Path) -> list[Piece]:
    pieces = load_pig_dir(path)
    if not pieces:
        raise DataError(f"no PIG files found under {path}")
    return pieces


def group_by_score(pieces: list[Piece]) -> dict[str, list[Piece]]:
    groups: dict[str, list[Piece]] = {}
    for piece in sorted(pieces, key=lambda p: (p.score_id, p.annotator_id)):
        groups.setdefault(piece.score_id, []).append(piece)
    return groups


def cv_split(score_ids: list[str], k: int, seed: int) -> list[list[str]]:
    """Partition scores into k near-equal folds; all annotations stay together."""
    distinct = sorted(set(score_ids))
    if k > len(distinct):
        raise DataError(f"cannot split {len(distinct)} scores into {k} folds")
    order = list(_rng(seed, _SEED_SPLIT).permutation(len(distinct)))
    folds: list[list[str]] = [[] for _ in range(k)]
    for pos, idx in enumerate(order):
        folds[pos % k].append(distinct[idx])
    return [sorted(fold) for fold in folds]


@dataclass
class HandSequence:
    """One hand's notes reduced to what training needs."""

    tokens: list[PitchDiffToken]
    midis: list[int]
    gold: np.ndarray


def hand_sequence(notes) -> HandSequence:
    return HandSequence(tokens=compute_pd(notes),
                        midis=[e.midi for e in notes],
                        gold=np.array([abs(e.finger) for e in notes], dtype=np.int64))


def from_generated(seq: augment.GeneratedSequence) -> HandSequence:
    return HandSequence(tokens=list(seq.tokens), midis=list(seq.midis),
                        gold=np.array(seq.fingers, dtype=np.int64))


def make_vocab(seqs: list[HandSequence], input_mode: str) -> Vocabulary:
    if input_mode == "raw_note":
        return Vocabulary(m for s in seqs for m in s.midis)
    return Vocabulary(t.d for s in seqs for t in s.tokens)


def input_ids(seq: HandSequence, vocab: Vocabulary, input_mode: str) -> np.ndarray:
    if input_mode == "raw_note":
        return vocab.ids(seq.midis)
    return vocab.ids([t.d for t in seq.tokens])


def predict_fingers(params: ModelParams, vocab: Vocabulary, notes, hand: Hand,
                    config: RunConfig) -> np.ndarray:
    """Full inference pipeline for one hand of one piece."""
    seq = hand_sequence(notes)
    ids = input_ids(seq, vocab, config.input_mode)
    lam = bilstm_forward(params, ids)
    up = params.trans_up if config.use_transition else np.zeros_like(params.trans_up)
    down = params.trans_down if config.use_transition else np.zeros_like(params.trans_down)
    if config.use_prior:
        return rules.decode_playable(lam, seq.tokens, hand, up, down)
    sel = transitions.selector_codes(seq.tokens)
    yhat = transitions.constrained_forward(lam, sel, up, down)
    return transitions.decode_argmax(yhat)


def _hand_midis(piece: Piece, hand: Hand) -> list[int]:
    return [e.midi for e in piece.hand_notes(hand)]


def build_groups(pieces: list[Piece], predict) -> list[metrics.ScoreGroup]:
    """Score-level prediction groups with the shared-prediction protocol.

    ``predict(hand, notes) -> fingers``.  Each score is predicted once on
    its first annotation's notes; an annotation whose note content
    diverges gets its own re-predicted labels so it stays comparable.
    """
    groups = []
    for score_id, plist in group_by_score(pieces).items():
        canon = plist[0]
        canonical = {}
        canonical_tokens = {}
        for hand in HANDS:
            notes = canon.hand_notes(hand)
            if notes:
                canonical[hand] = predict(hand, notes)
                canonical_tokens[hand] = compute_pd(notes)
        pairs = []
        for piece in plist:
            if all(_hand_midis(piece, hand) == _hand_midis(canon, hand) for hand in HANDS):
                pairs.append((piece, canonical))
            else:
                fallback = {hand: predict(hand, piece.hand_notes(hand))
                            for hand in HANDS if piece.hand_notes(hand)}
                pairs.append((piece, fallback))
        groups.append(metrics.ScoreGroup(score_id=score_id, canonical=canonical,
                                         canonical_tokens=canonical_tokens, pairs=pairs))
    return groups


def _hand_alpha(piece: Piece, hand: Hand, fingers: np.ndarray) -> float | None:
    notes = piece.hand_notes(hand)
    if not notes:
        return None
    if len(notes) != len(fingers):
        raise DataError(f"{piece.score_id}: {len(notes)} notes vs {len(fingers)} fingers")
    wrong = sum(1 for e, f in zip(notes, fingers) if abs(e.finger) != f)
    return 1.0 - wrong / len(notes)


def hand_m_gen(val_pieces: list[Piece], hand: Hand, predict) -> float:
    """Mean per-pair agreement on one hand only (early-stopping signal)."""
    alphas = []
    for plist in group_by_score(val_pieces).values():
        canon = plist[0]
        notes = canon.hand_notes(hand)
        shared = predict(hand, notes) if notes else None
        for piece in plist:
            own = piece.hand_notes(hand)
            if not own:
                continue
            if shared is not None and _hand_midis(piece, hand) == _hand_midis(canon, hand):
                alphas.append(_hand_alpha(piece, hand, shared))
            else:
                alphas.append(_hand_alpha(piece, hand, predict(hand, own)))
    return float(np.mean(alphas)) if alphas else 0.0


@dataclass
class TrainedHand:
    params: ModelParams
    vocab: Vocabulary
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0


def train_hand(train_seqs: list[HandSequence], val_pieces: list[Piece], hand: Hand,
               config: RunConfig, fold_idx: int, log=None) -> TrainedHand:
    """Adam-train one hand's model with early stopping on validation agreement."""
    if not train_seqs:
        raise DataError(f"no {hand.name.lower()}-hand training sequences in fold {fold_idx}")
    vocab = make_vocab(train_seqs, config.input_mode)
    params = init_params(config.hidden_size, vocab.size, config.depth,
                         rng=_rng(config.seed, fold_idx, HAND_CODE[hand], _SEED_INIT))
    adam = AdamState.for_params(params)
    hyper = AdamHyper(lr=config.lr)
    order_rng = _rng(config.seed, fold_idx, HAND_CODE[hand], _SEED_ORDER)

    prepared = []
    for seq in train_seqs:
        prepared.append((input_ids(seq, vocab, config.input_mode),
                         transitions.selector_codes(seq.tokens), seq.gold))

    def val_metric() -> float:
        predict = lambda h, notes: predict_fingers(params, vocab, notes, h, config)
        return hand_m_gen(val_pieces, hand, predict)

    best_val = -1.0
    best_snapshot = None
    best_epoch = 0
    stale = 0
    history = []
    for epoch in range(1, config.epochs + 1):
        perm = order_rng.permutation(len(prepared))
        total = 0.0
        for idx in perm:
            ids, sel, gold = prepared[idx]
            try:
                loss, grads = loss_and_gradients(params, ids, sel, gold,
                                                 use_transition=config.use_transition)
                if not math.isfinite(loss):
                    raise NumericError(f"loss became {loss}")
                clip_gradients(grads, config.clip)
                adam_step(params, grads, adam, hyper)
            except NumericError as exc:
                raise NumericError(
                    f"fold {fold_idx}, {hand.name.lower()} hand, epoch {epoch}: {exc}") from exc
            total += loss
        train_loss = total / len(prepared)
        val = val_metric()
        history.append({"epoch": epoch, "train_loss": train_loss, "val_m_gen": val})
        if log:
            log(f"  fold {fold_idx} {hand.name.lower():5s} epoch {epoch:3d} "
                f"loss {train_loss:.4f} val {val:.4f}")
        if val > best_val:
            best_val = val
            best_epoch = epoch
            best_snapshot = {n: t.copy() for n, t in params.tensors().items()}
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    if best_snapshot is not None:
        for name, value in best_snapshot.items():
            params.set_tensor(name, value)
    return TrainedHand(params=params, vocab=vocab, history=history, best_epoch=best_epoch)


def _fold_materials(pieces_by_score, train_scores, config: RunConfig, fold_idx: int):
    """Training sequences per hand (plus augmentation) and the validation pieces."""
    val_rng = _rng(config.seed, fold_idx, _SEED_VAL)
    ordered = sorted(train_scores)
    n_val = max(1, round(config.val_fraction * len(ordered)))
    val_scores = sorted(ordered[i] for i in val_rng.permutation(len(ordered))[:n_val])
    fit_scores = [s for s in ordered if s not in val_scores]
    if not fit_scores:
        raise DataError(f"fold {fold_idx}: validation split consumed every training score")
    fit_pieces = [p for s in fit_scores for p in pieces_by_score[s]]
    val_pieces = [p for s in val_scores for p in pieces_by_score[s]]

    seqs: dict[Hand, list[HandSequence]] = {}
    for hand in HANDS:
        seqs[hand] = [hand_sequence(p.hand_notes(hand)) for p in fit_pieces
                      if p.hand_notes(hand)]
    if config.augment:
        for hand in HANDS:
            stats = augment.collect_stats(fit_pieces, hand, config.augment_threshold)
            generated = augment.generate(
                stats, config.augment_count,
                (config.augment_min_len, config.augment_max_len),
                seed=_derived_seed(config.seed, fold_idx, HAND_CODE[hand], _SEED_AUGMENT))
            seqs[hand].extend(from_generated(g) for g in generated)
    return seqs, val_pieces, val_scores


def _config_payload(config: RunConfig) -> dict:
    return {
        "input_mode": config.input_mode,
        "use_prior": config.use_prior,
        "use_transition": config.use_transition,
        "hidden_size": config.hidden_size,
        "depth": config.depth,
        "seed": config.seed,
        "folds": config.folds,
        "augment": config.augment,
    }


def fold_checkpoint_path(out_dir: str | Path, fold_idx: int) -> Path:
    return Path(out_dir) / f"fold{fold_idx:02d}.ckpt.json"


def train_run(config: RunConfig, log=None) -> dict:
    """Train every fold and persist checkpoints; returns a summary dict."""
    pieces = load_dataset(config.dataset_dir)
    pieces_by_score = group_by_score(pieces)
    folds = cv_split(list(pieces_by_score), config.folds, config.seed)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(dump_config(config), encoding="utf-8")

    summary = {"folds": []}
    for fold_idx, test_scores in enumerate(folds):
        train_scores = [s for s in pieces_by_score if s not in set(test_scores)]
        seqs, val_pieces, val_scores = _fold_materials(pieces_by_score, train_scores,
                                                       config, fold_idx)
        doc = {"config": _config_payload(config), "fold": fold_idx,
               "test_scores": list(test_scores), "val_scores": val_scores, "hands": {}}
        fold_summary = {"fold": fold_idx, "test_scores": list(test_scores), "hands": {}}
        for hand in HANDS:
            if not seqs[hand]:
                if log:
                    log(f"fold {fold_idx}: no {hand.name.lower()}-hand data, hand skipped")
                continue
            trained = train_hand(seqs[hand], val_pieces, hand, config, fold_idx, log=log)
            doc["hands"][hand.name.lower()] = {
                "model": checkpoint.model_payload(trained.params),
                "vocab": checkpoint.vocab_payload(trained.vocab),
                "history": trained.history,
                "best_epoch": trained.best_epoch,
            }
            fold_summary["hands"][hand.name.lower()] = {
                "epochs_run": len(trained.history),
                "best_epoch": trained.best_epoch,
                "best_val_m_gen": max((h["val_m_gen"] for h in trained.history), default=0.0),
            }
        checkpoint.save_checkpoint(fold_checkpoint_path(out_dir, fold_idx), doc)
        summary["folds"].append(fold_summary)
    return summary


def load_fold_models(doc: dict) -> dict[Hand, tuple[ModelParams, Vocabulary]]:
    out = {}
    for hand in HANDS:
        payload = doc["hands"].get(hand.name.lower())
        if payload:
            out[hand] = (checkpoint.model_from_payload(payload["model"]),
                         checkpoint.vocab_from_payload(payload["vocab"]))
    return out


def _checkpoint_config(doc: dict, base: RunConfig) -> RunConfig:
    cfg = doc.get("config", {})
    values = {f: getattr(base, f) for f in ("dataset_dir", "out_dir")}
    return RunConfig(
        hidden_size=cfg.get("hidden_size", base.hidden_size),
        depth=cfg.get("depth", base.depth),
        input_mode=cfg.get("input_mode", base.input_mode),
        use_prior=cfg.get("use_prior", base.use_prior),
        use_transition=cfg.get("use_transition", base.use_transition),
        seed=cfg.get("seed", base.seed),
        folds=cfg.get("folds", base.folds),
        **values,
    )


def evaluate_run(config: RunConfig, run_dir: str | Path | None = None) -> metrics.EvalReport:
    """Predict every fold's held-out scores with that fold's checkpoint."""
    run_dir = Path(run_dir if run_dir is not None else config.out_dir)
    pieces = load_dataset(config.dataset_dir)
    pieces_by_score = group_by_score(pieces)
    folds = cv_split(list(pieces_by_score), config.folds, config.seed)
    groups = []
    missing = []
    for fold_idx, test_scores in enumerate(folds):
        path = fold_checkpoint_path(run_dir, fold_idx)
        if not path.exists():
            missing.extend(test_scores)
            continue
        doc = checkpoint.load_checkpoint(path)
        eval_config = _checkpoint_config(doc, config)
        models = load_fold_models(doc)

        def predict(hand: Hand, notes):
            if hand not in models:
                raise DataError(f"fold {fold_idx} checkpoint has no {hand.name.lower()} model")
            params, vocab = models[hand]
            return predict_fingers(params, vocab, notes, hand, eval_config)

        test_pieces = [p for s in test_scores for p in pieces_by_score.get(s, [])]
        groups.extend(build_groups(test_pieces, predict))
    if missing:
        raise DataError("missing checkpoints for scores: " + ", ".join(sorted(missing)))
    return metrics.evaluate(groups)


def annotate_piece(doc: dict, piece: Piece, base: RunConfig) -> tuple[Piece, list[str]]:
    """Re-finger one piece with a checkpoint's models; existing labels are ignored."""
    models = load_fold_models(doc)
    eval_config = _checkpoint_config(doc, base)
    fingers = {}
    warnings = []
    for hand in HANDS:
        notes = piece.hand_notes(hand)
        if not notes:
            warnings.append(f"{piece.score_id}: no {hand.name.lower()}-hand notes, skipped")
            continue
        if hand not in models:
            warnings.append(f"{piece.score_id}: checkpoint has no {hand.name.lower()} model, "
                            "hand left unchanged")
            continue
        params, vocab = models[hand]
        fingers[hand] = list(predict_fingers(params, vocab, notes, hand, eval_config))
    return with_fingers(piece, fingers), warnings


def annotate_file(checkpoint_path: str | Path, in_path: str | Path, out_path: str | Path,
                  base: RunConfig) -> list[str]:
    from .pig import load_pig_file

    doc = checkpoint.load_checkpoint(checkpoint_path)
    piece = load_pig_file(in_path)
    annotated, warnings = annotate_piece(doc, piece, base)
    save_pig_file(annotated, out_path)
    return warnings


def majority_finger(seqs: list[HandSequence]) -> int:
    """Most frequent finger over a hand's training sequences; ties to smaller."""
    counts = np.zeros(6, dtype=np.int64)
    for seq in seqs:
        for f in seq.gold:
            counts[f] += 1
    if counts.sum() == 0:
        raise DataError("no labels to take a majority over")
    return int(np.argmax(counts[1:])) + 1


def token_majority(seqs: list[HandSequence], input_mode: str = "pitch_diff") -> dict[int, int]:
    """Per input code, its most frequent finger (context-free baseline table)."""
    counts: dict[int, np.ndarray] = {}
    for seq in seqs:
        codes = seq.midis if input_mode == "raw_note" else [t.d for t in seq.tokens]
        for code, f in zip(codes, seq.gold):
            counts.setdefault(code, np.zeros(6, dtype=np.int64))[f] += 1
    return {code: int(np.argmax(c[1:])) + 1 for code, c in sorted(counts.items())}


def baseline_constant_predictor(train_by_hand: dict[Hand, list[HandSequence]]):
    choice = {hand: majority_finger(seqs) for hand, seqs in train_by_hand.items() if seqs}

    def predict(hand: Hand, notes):
        return np.full(len(notes), choice[hand], dtype=np.int64)

    return predict


def baseline_token_predictor(train_by_hand: dict[Hand, list[HandSequence]],
                             input_mode: str = "pitch_diff"):
    tables = {hand: token_majority(seqs, input_mode)
              for hand, seqs in train_by_hand.items() if seqs}
    fallback = {hand: majority_finger(seqs) for hand, seqs in train_by_hand.items() if seqs}

    def predict(hand: Hand, notes):
        seq = hand_sequence(notes)
        codes = seq.midis if input_mode == "raw_note" else [t.d for t in seq.tokens]
        table = tables[hand]
        return np.array([table.get(c, fallback[hand]) for c in codes], dtype=np.int64)

    return predict
