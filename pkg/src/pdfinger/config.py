"""Run configuration: a flat key=value text file plus CLI overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import UsageError

INPUT_MODES = ("pitch_diff", "raw_note")


@dataclass
class RunConfig:
    """Everything a training or evaluation run depends on."""

    dataset_dir: str = ""
    out_dir: str = "runs"
    hidden_size: int = 64
    depth: int = 1
    lr: float = 1e-3
    epochs: int = 100
    patience: int = 10
    clip: float = 5.0
    seed: int = 0
    folds: int = 35
    val_fraction: float = 0.1
    augment: bool = True
    augment_count: int = 50
    augment_min_len: int = 150
    augment_max_len: int = 300
    augment_threshold: float = 0.05
    use_prior: bool = True
    use_transition: bool = True
    input_mode: str = "pitch_diff"

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise UsageError(f"input_mode must be one of {INPUT_MODES}, got {self.input_mode!r}")
        if self.folds < 1:
            raise UsageError(f"folds must be positive, got {self.folds}")
        if not 0 < self.val_fraction < 1:
            raise UsageError(f"val_fraction must be in (0, 1), got {self.val_fraction}")


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    if kind == "bool":
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise UsageError(f"config key {name}: cannot read {raw!r} as a boolean")
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError as exc:
        raise UsageError(f"config key {name}: {exc}") from exc
    return raw


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise UsageError(f"config line {line_no}: expected key = value, got {line!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise UsageError(f"config line {line_no}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return RunConfig(**values)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"))


def apply_overrides(config: RunConfig, overrides: dict) -> RunConfig:
    """New config with the given fields replaced (None values are skipped)."""
    values = {f.name: getattr(config, f.name) for f in fields(RunConfig)}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in values:
            raise UsageError(f"unknown config key {key!r}")
        values[key] = value
    return RunConfig(**values)


def dump_config(config: RunConfig) -> str:
    lines = [f"{f.name} = {getattr(config, f.name)}" for f in fields(RunConfig)]
    return "\n".join(lines) + "\n"
