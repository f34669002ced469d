"""Named datasets shipped with the package."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from .patterns import PatternSet, load_patterns

# 1000 MNIST digits, 100 per class, labels cycling 0..9
BUNDLED = {"mnist": "mnist-1k-images-idx3-ubyte.gz"}


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"no bundled dataset {name!r}; known: {sorted(BUNDLED)}")
    return Path(str(resources.files("uhop") / "data" / BUNDLED[name]))


def load_dataset(source) -> PatternSet:
    """Load a bundled dataset by name, or an IDX/CSV file by path."""
    if isinstance(source, str) and source in BUNDLED:
        return load_patterns(bundled_path(source))
    return load_patterns(source)
