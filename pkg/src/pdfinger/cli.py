"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import augment, harness, metrics, rules
from .config import INPUT_MODES, RunConfig, apply_overrides, load_config
from .errors import DataError, NumericError, PdfingerError, UsageError
from .pig import Hand


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; our contract reserves 2
    # for data errors, so usage problems are rethrown and mapped to 1
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pdfinger", description="Piano fingering estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    prep = sub.add_parser("prep", help="parse a corpus and print its statistics")
    prep.add_argument("--dataset", required=True)

    train = sub.add_parser("train", help="cross-validated training")
    train.add_argument("--dataset")
    train.add_argument("--out")
    train.add_argument("--config")
    train.add_argument("--seed", type=int)
    train.add_argument("--folds", type=int)
    train.add_argument("--hidden-size", type=int, dest="hidden_size")
    train.add_argument("--depth", type=int)
    train.add_argument("--lr", type=float)
    train.add_argument("--epochs", type=int)
    train.add_argument("--patience", type=int)
    train.add_argument("--input-mode", choices=INPUT_MODES, dest="input_mode")
    train.add_argument("--no-augment", action="store_true")
    train.add_argument("--no-prior", action="store_true")
    train.add_argument("--no-transition", action="store_true")
    train.add_argument("--quiet", action="store_true")

    annotate = sub.add_parser("annotate", help="finger a PIG file with a checkpoint")
    annotate.add_argument("--checkpoint", required=True)
    annotate.add_argument("--input", required=True)
    annotate.add_argument("--output", required=True)

    evaluate = sub.add_parser("evaluate", help="score held-out folds of one or more runs")
    evaluate.add_argument("--dataset")
    evaluate.add_argument("--run", action="append", default=None,
                          help="run directory (repeat to compare ablations)")
    evaluate.add_argument("--table", action="store_true", help="print the aligned table form")

    aug = sub.add_parser("augment", help="generate synthetic training data")
    aug.add_argument("--dataset", required=True)
    aug.add_argument("--out", required=True)
    aug.add_argument("--count", type=int, default=50)
    aug.add_argument("--min-len", type=int, default=150, dest="min_len")
    aug.add_argument("--max-len", type=int, default=300, dest="max_len")
    aug.add_argument("--seed", type=int, default=0)
    aug.add_argument("--threshold", type=float, default=0.05)

    rules_cmd = sub.add_parser("rules", help="feasibility table utilities")
    rules_cmd.add_argument("action", choices=["check"])
    return parser


def _cmd_prep(args) -> int:
    from .encode import hand_statistics

    pieces = harness.load_dataset(args.dataset)
    scores = harness.group_by_score(pieces)
    notes = sum(p.note_count for p in pieces)
    diagnostics = [d for p in pieces for d in p.diagnostics]
    print(f"scores: {len(scores)}")
    print(f"annotations: {len(pieces)}")
    print(f"notes: {notes}")
    for hand in (Hand.RIGHT, Hand.LEFT):
        stats = hand_statistics([p.hand_notes(hand) for p in pieces if p.hand_notes(hand)])
        print(f"{hand.name.lower()}_distinct_codes: {stats['distinct_codes']}")
        print(f"{hand.name.lower()}_raw_combinations: {stats['raw_combinations']}")
    print(f"parse_diagnostics: {len(diagnostics)}")
    for diag in diagnostics:
        print(f"  {diag}")
    return 0


def _train_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {
        "dataset_dir": args.dataset,
        "out_dir": args.out,
        "seed": args.seed,
        "folds": args.folds,
        "hidden_size": args.hidden_size,
        "depth": args.depth,
        "lr": args.lr,
        "epochs": args.epochs,
        "patience": args.patience,
        "input_mode": args.input_mode,
    }
    if args.no_augment:
        overrides["augment"] = False
    if args.no_prior:
        overrides["use_prior"] = False
    if args.no_transition:
        overrides["use_transition"] = False
    config = apply_overrides(config, overrides)
    if not config.dataset_dir:
        raise UsageError("no dataset: pass --dataset or set dataset_dir in the config file")
    return config


def _cmd_train(args) -> int:
    config = _train_config(args)
    log = None if args.quiet else print
    summary = harness.train_run(config, log=log)
    for fold in summary["folds"]:
        for hand, info in fold["hands"].items():
            print(f"fold {fold['fold']} {hand:5s} best epoch {info['best_epoch']} "
                  f"val m_gen {info['best_val_m_gen']:.4f}")
    print(f"checkpoints written to {config.out_dir}")
    return 0


def _cmd_annotate(args) -> int:
    warnings = harness.annotate_file(args.checkpoint, args.input, args.output, RunConfig())
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"annotated {args.input} -> {args.output}")
    return 0


def _run_report(run_dir: str, dataset: str | None) -> metrics.EvalReport:
    config_path = Path(run_dir) / "config.txt"
    if not config_path.exists():
        raise DataError(f"{run_dir} has no config.txt; was it produced by `pdfinger train`?")
    config = load_config(config_path)
    if dataset:
        config = apply_overrides(config, {"dataset_dir": dataset})
    return harness.evaluate_run(config, run_dir)


def _cmd_evaluate(args) -> int:
    runs = args.run or ["runs"]
    reports = [(run, _run_report(run, args.dataset)) for run in runs]
    for run, report in reports:
        print(f"== {run} ==")
        print(metrics.report_table(report) if args.table else metrics.report_text(report))
        print()
    if len(reports) > 1:
        base_name, base = reports[0]
        print(f"deltas vs {base_name}:")
        for run, report in reports[1:]:
            print(f"  {run}: m_gen {report.m_gen - base.m_gen:+.4f} "
                  f"m_high {report.m_high - base.m_high:+.4f} "
                  f"ifr {report.ifr - base.ifr:+.4f}")
    return 0


def _cmd_augment(args) -> int:
    pieces = harness.load_dataset(args.dataset)
    sequences = {}
    notes = {}
    for hand in (Hand.RIGHT, Hand.LEFT):
        stats = augment.collect_stats(pieces, hand, args.threshold)
        sequences[hand] = augment.generate(stats, args.count, (args.min_len, args.max_len),
                                           seed=args.seed)
        notes[hand.name.lower()] = augment.stats_summary(stats)
    notes["seed"] = args.seed
    paths = augment.write_augmented(sequences[Hand.RIGHT], sequences[Hand.LEFT],
                                    args.out, stats_note=notes)
    print(f"wrote {len(paths)} augmented files to {args.out}")
    return 0


def _cmd_rules(args) -> int:
    print(rules.render_tables())
    problems = rules.audit()
    if problems:
        for p in problems:
            print(f"MISMATCH {p}", file=sys.stderr)
        return 2
    print("closed form agrees with the tables on all 100 cells")
    return 0


_COMMANDS = {
    "prep": _cmd_prep,
    "train": _cmd_train,
    "annotate": _cmd_annotate,
    "evaluate": _cmd_evaluate,
    "augment": _cmd_augment,
    "rules": _cmd_rules,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except PdfingerError as exc:
        # DataError, PigParseError, and any other data-shaped failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
