"""Memory pattern storage, dataset ingestion and query corruption.

A :class:`PatternSet` holds the memory matrix column-wise: ``data[:, mu]`` is
memory ``mu``, so ``data`` has shape ``(d, M)``.
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
from scipy.spatial.distance import pdist

from ._io import text_sink
from .errors import DimensionError, EmptyDataset, MalformedMagic, TruncatedPayload

IDX_IMAGE_MAGIC = 0x00000803

PathLike = Union[str, Path]


@dataclass(frozen=True)
class PatternSet:
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionError(f"pattern matrix must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise EmptyDataset("pattern set needs d >= 1 and M >= 1")
        if not np.all(np.isfinite(data)):
            raise ValueError("pattern entries must be finite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_rows(cls, rows) -> "PatternSet":
        """Build from an ``(M, d)`` array with one memory per row."""
        return cls(np.asarray(rows, dtype=np.float64).T)

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def M(self) -> int:
        return self.data.shape[1]

    def pattern(self, mu: int) -> np.ndarray:
        if not 0 <= mu < self.M:
            raise IndexError(f"memory index {mu} outside [0, {self.M})")
        return self.data[:, mu]

    def subset(self, indices) -> "PatternSet":
        return PatternSet(self.data[:, np.asarray(indices)])


@dataclass(frozen=True)
class SeparationStats:
    delta: np.ndarray
    R: float
    m: float


def separation_stats(ps: PatternSet) -> SeparationStats:
    """Per-memory margins ``delta``, half minimal distance ``R`` and max norm ``m``.

    With a single memory, ``R`` is ``inf`` and ``delta[0]`` is its squared norm.
    """
    X = ps.data
    gram = X.T @ X
    self_ip = np.diag(gram).copy()
    m = float(np.sqrt(self_ip.max()))
    if ps.M == 1:
        return SeparationStats(delta=self_ip, R=float("inf"), m=m)
    cross = gram.copy()
    np.fill_diagonal(cross, -np.inf)
    delta = self_ip - cross.max(axis=0)
    # pdist returns exact zeros for duplicate columns, unlike the Gram identity.
    R = 0.5 * float(pdist(X.T).min())
    return SeparationStats(delta=delta, R=R, m=m)


# -- corruption -----------------------------------------------------------------


@dataclass(frozen=True)
class MaskFraction:
    """Zero out ``floor(fraction * d)`` coordinates chosen without replacement."""

    fraction: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("mask fraction must lie in [0, 1]")


@dataclass(frozen=True)
class GaussianNoise:
    """Add a Gaussian direction rescaled to norm ``level * m``."""

    level: float
    seed: int = 0

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be nonnegative")


QueryCorruption = Union[MaskFraction, GaussianNoise]


def corrupt(x, c: QueryCorruption, stats: SeparationStats) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    rng = np.random.default_rng(c.seed)
    d = x.shape[0]
    if isinstance(c, MaskFraction):
        k = int(np.floor(c.fraction * d))
        if k:
            x[rng.choice(d, size=k, replace=False)] = 0.0
        return x
    if isinstance(c, GaussianNoise):
        if c.level == 0.0:
            return x
        if stats.m <= 0:
            raise ValueError("noise corruption needs a pattern set with m > 0")
        eta = rng.standard_normal(d)
        eta *= c.level * stats.m / np.linalg.norm(eta)
        return x + eta
    raise TypeError(f"unknown corruption {c!r}")


# -- IDX ------------------------------------------------------------------------


def _read_bytes(path: PathLike) -> bytes:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(2)
    opener = gzip.open if head == b"\x1f\x8b" else open
    with opener(path, "rb") as fh:
        return fh.read()


def load_idx(path: PathLike) -> PatternSet:
    """Read a big-endian IDX image file (gzip accepted) into a pattern set.

    Images are flattened row-major and scaled to [0, 1].
    """
    raw = _read_bytes(path)
    if len(raw) < 16:
        raise TruncatedPayload(f"{path}: header shorter than 16 bytes")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise MalformedMagic(f"{path}: magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    if count == 0:
        raise EmptyDataset(f"{path}: file holds zero images")
    d = rows * cols
    need = 16 + count * d
    if len(raw) < need:
        raise TruncatedPayload(f"{path}: expected {need} bytes, found {len(raw)}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * d, offset=16)
    return PatternSet(pixels.reshape(count, d).T.astype(np.float64) / 255.0)


def write_idx(path: PathLike, images, rows: int, cols: int, compress: bool = False) -> None:
    """Write uint8 images of shape ``(count, rows*cols)`` as an IDX image file."""
    images = np.asarray(images, dtype=np.uint8).reshape(-1, rows * cols)
    payload = struct.pack(">IIII", IDX_IMAGE_MAGIC, images.shape[0], rows, cols) + images.tobytes()
    with open(path, "wb") as raw:
        if compress:
            # blank name and mtime=0 keep the gzip bytes stable
            with gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as fh:
                fh.write(payload)
        else:
            raw.write(payload)


# -- internal CSV format -------------------------------------------------------


def save_csv(ps: PatternSet, path: PathLike) -> None:
    """Header line ``d,M`` followed by one line of ``d`` values per memory."""
    lines = [f"{ps.d},{ps.M}"]
    for mu in range(ps.M):
        lines.append(",".join(f"{v:.17g}" for v in ps.data[:, mu]))
    with text_sink(path) as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path: PathLike) -> PatternSet:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise EmptyDataset(f"{path}: empty file")
    d, M = (int(v) for v in lines[0].split(","))
    body = lines[1:]
    if len(body) != M:
        raise TruncatedPayload(f"{path}: header says {M} memories, found {len(body)}")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in body], dtype=np.float64)
    if rows.shape != (M, d):
        raise DimensionError(f"{path}: expected {M}x{d} values, got {rows.shape}")
    return PatternSet(rows.T)


def load_patterns(path: PathLike) -> PatternSet:
    """Dispatch on content: IDX (optionally gzipped) or the internal CSV format."""
    raw = _read_bytes(path)
    if len(raw) >= 4 and raw[:2] == b"\x00\x00":
        return load_idx(path)
    return load_csv(path)
