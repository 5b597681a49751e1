"""Hot-loop kernels with backend selection.

The compiled Cython backend (``_speedups``) is used when importable; the
numpy reference backend is the fallback.  ``PDFINGER_BACKEND`` overrides the
choice: ``fast`` insists on the compiled extension, ``reference`` forces the
fallback, ``auto`` (default) prefers compiled.
"""

from __future__ import annotations

import os

from . import _reference


def _load_fast():
    try:
        from . import _speedups  # noqa: PLC0415 - optional compiled module

        return _speedups
    except ImportError:
        return None


def available_backends() -> dict:
    """Name -> module for every importable backend."""
    backends = {"reference": _reference}
    fast = _load_fast()
    if fast is not None:
        backends["fast"] = fast
    return backends


def _select():
    choice = os.environ.get("PDFINGER_BACKEND", "auto").lower()
    fast = _load_fast()
    if choice == "reference":
        return _reference
    if choice == "fast":
        if fast is None:
            raise ImportError("PDFINGER_BACKEND=fast but the compiled extension is not built")
        return fast
    return fast if fast is not None else _reference


_active = _select()

backend_name: str = _active.NAME
lstm_forward = _active.lstm_forward
lstm_backward = _active.lstm_backward
transition_forward = _active.transition_forward
transition_backward = _active.transition_backward
