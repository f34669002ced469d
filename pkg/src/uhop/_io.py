from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path


@contextmanager
def text_sink(target):
    """Yield a writable text handle for a path, or pass an open stream through untouched."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(Path(target), "w", newline="") as fh:
            yield fh
