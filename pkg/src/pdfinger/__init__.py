"""Piano fingering estimation from pitch-difference sequences.

Pipeline: PIG-format score parsing -> pitch-difference encoding ->
bidirectional LSTM tagging with learned finger-transition matrices ->
kinematic feasibility pruning at decode time.  Includes evaluation
metrics, corpus-statistics data augmentation, and a cross-validation
training harness behind the ``pdfinger`` CLI.
"""

from .encode import PitchDiffToken, Vocabulary, build_vocab, compute_pd
from .errors import DataError, NumericError, PdfingerError, PigParseError, UsageError
from .metrics import EvalReport, matching_rate
from .model import ModelParams, bilstm_forward, init_params
from .pig import Hand, NoteEvent, Piece, load_pig_dir, load_pig_file, save_pig_file
from .rules import decision, decode_playable, feasibility_table

__version__ = "0.1.0"

__all__ = [
    "DataError", "EvalReport", "Hand", "ModelParams", "NoteEvent", "PdfingerError",
    "Piece", "PigParseError", "PitchDiffToken", "NumericError", "UsageError",
    "Vocabulary", "bilstm_forward", "build_vocab", "compute_pd", "decision",
    "decode_playable", "feasibility_table", "init_params", "load_pig_dir",
    "load_pig_file", "matching_rate", "save_pig_file", "__version__",
]
