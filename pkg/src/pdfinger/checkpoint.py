"""Checkpoint persistence with bitwise-reproducible round trips.

Checkpoints are JSON: float64 values survive a dump/load cycle exactly
(the serializer emits the shortest repr that parses back to the same
double), keys are sorted, and arrays carry explicit shapes.  Two runs
that produce equal tensors therefore produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .encode import Vocabulary
from .errors import DataError
from .model import LstmCellParams, ModelParams

FORMAT_TAG = "pdfinger-checkpoint-1"


def _array_out(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": np.asarray(arr, dtype=np.float64).ravel().tolist()}


def _array_in(obj: dict) -> np.ndarray:
    data = np.array(obj["data"], dtype=np.float64)
    return data.reshape(obj["shape"])


def model_payload(params: ModelParams) -> dict:
    return {
        "hidden_size": params.hidden_size,
        "input_size": params.input_size,
        "depth": params.depth,
        "k": params.k,
        "tensors": {name: _array_out(t) for name, t in params.tensors().items()},
    }


def model_from_payload(payload: dict) -> ModelParams:
    hidden = payload["hidden_size"]
    tensors = payload["tensors"]

    def cell(idx: int, direction: str) -> LstmCellParams:
        prefix = f"layers.{idx}.{direction}"
        return LstmCellParams(**{
            leaf: _array_in(tensors[f"{prefix}.{leaf}"])
            for leaf in ("w_f", "w_i", "w_c", "w_o", "b_f", "b_i", "b_c", "b_o")
        })

    layers = [{"fwd": cell(i, "fwd"), "bwd": cell(i, "bwd")} for i in range(payload["depth"])]
    params = ModelParams(layers=layers,
                         proj_w=_array_in(tensors["proj_w"]),
                         proj_b=_array_in(tensors["proj_b"]),
                         trans_up=_array_in(tensors["trans_up"]),
                         trans_down=_array_in(tensors["trans_down"]),
                         k=payload["k"])
    if params.hidden_size != hidden:
        raise DataError("checkpoint hidden_size disagrees with its tensors")
    return params


def vocab_payload(vocab: Vocabulary) -> dict:
    return {"values": list(vocab.values)}


def vocab_from_payload(payload: dict) -> Vocabulary:
    return Vocabulary(payload["values"])


def save_checkpoint(path: str | Path, payload: dict) -> None:
    """Write a tagged checkpoint document; ``payload`` must be JSON-ready."""
    doc = {"format": FORMAT_TAG}
    doc.update(payload)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    if doc.get("format") != FORMAT_TAG:
        raise DataError(f"checkpoint {path} has format {doc.get('format')!r}, "
                        f"expected {FORMAT_TAG!r}")
    return doc
