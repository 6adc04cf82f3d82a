"""Unit-norm embedding batches, temperature-scaled score matrices and exact retrieval.

Nearest-neighbor search is brute force over the full gallery: at the gallery
sizes this package targets, exactness is cheap and keeps every metric
checkable against a scalar oracle. All rankings break score ties by ascending
id so results are a total order.

Embedding files use a small binary format: magic ``GBEM``, a version byte,
a view tag byte (0=drone, 1=panorama, 2=satellite, 3=text), the record count
as u64 LE, the dimension as u32 LE, then per record a u64 LE id followed by
the row as IEEE-754 binary32 LE values.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    EmbeddingFormatError,
    KOutOfRange,
    ZeroVector,
)

UNIT_NORM_TOL = 1e-6

GBEM_MAGIC = b"GBEM"
GBEM_VERSION = 1
VIEW_TAGS = {"drone": 0, "panorama": 1, "satellite": 2, "text": 3}
_TAG_VIEWS = {tag: view for view, tag in VIEW_TAGS.items()}


def l2_normalize(v: np.ndarray) -> np.ndarray:
    """Scale a vector to unit Euclidean norm."""
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ZeroVector("cannot normalize the zero vector")
    return v / norm


def l2_normalize_rows(m: np.ndarray) -> np.ndarray:
    """Row-wise unit normalization of a 2-D array."""
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0.0):
        raise ZeroVector(f"zero row at index {int(np.argmin(norms))}")
    return m / norms[:, None]


@dataclass(frozen=True)
class Temperature:
    """Positive softmax temperature stored as log(tau) so tau stays > 0."""

    log_tau: float = math.log(0.07)

    @classmethod
    def from_tau(cls, tau: float) -> "Temperature":
        if tau <= 0.0:
            raise ValueError(f"temperature must be positive: {tau}")
        return cls(log_tau=math.log(tau))

    @property
    def tau(self) -> float:
        return math.exp(self.log_tau)


@dataclass
class EmbeddingBatch:
    """A batch of unit-norm embeddings for one view.

    ``matrix`` is (B, D) float64 with every row unit-norm within 1e-6;
    ``ids[i]`` identifies the instance embedded in row i.
    """

    view: str
    ids: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.view not in VIEW_TAGS:
            raise ValueError(f"unknown view {self.view!r}; expected one of {sorted(VIEW_TAGS)}")
        self.ids = tuple(int(i) for i in self.ids)
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("batch ids must be unique")
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != len(self.ids):
            raise ValueError(f"matrix shape {m.shape} does not match {len(self.ids)} ids")
        norms = np.linalg.norm(m, axis=1)
        bad = np.where(np.abs(norms - 1.0) > UNIT_NORM_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"row {i} (id {self.ids[i]}) is not unit-norm: {norms[i]!r}")
        self.matrix = m

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ScoreMatrix:
    """Temperature-scaled cosine similarities between a query and a gallery batch."""

    values: np.ndarray
    query_view: str
    gallery_view: str


def score_matrix(q: EmbeddingBatch, g: EmbeddingBatch, t: Temperature) -> ScoreMatrix:
    """Pairwise scores: (row-normalized q) @ (row-normalized g)^T divided by tau."""
    if q.dim != g.dim:
        raise DimensionMismatch(f"query dim {q.dim} != gallery dim {g.dim}")
    values = (q.matrix @ g.matrix.T) / t.tau
    return ScoreMatrix(values=values, query_view=q.view, gallery_view=g.view)


def top_k(query: np.ndarray, gallery: EmbeddingBatch, k: int) -> list[tuple[int, float]]:
    """The k gallery entries most cosine-similar to the query vector.

    Returns (id, score) pairs in descending score order; exact ties are
    ordered by ascending id.
    """
    if not 1 <= k <= len(gallery):
        raise KOutOfRange(f"k={k} outside 1..{len(gallery)}")
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (gallery.dim,):
        raise DimensionMismatch(f"query shape {query.shape} != ({gallery.dim},)")
    scores = gallery.matrix @ query
    order = np.lexsort((np.asarray(gallery.ids), -scores))
    return [(gallery.ids[i], float(scores[i])) for i in order[:k]]


def write_embeddings(path: str | Path, batch: EmbeddingBatch) -> None:
    """Write a batch in the GBEM wire format (rows stored as float32)."""
    rows = batch.matrix.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(GBEM_MAGIC)
        fh.write(bytes([GBEM_VERSION, VIEW_TAGS[batch.view]]))
        fh.write(struct.pack("<Q", len(batch)))
        fh.write(struct.pack("<I", batch.dim))
        for ident, row in zip(batch.ids, rows):
            fh.write(struct.pack("<Q", ident))
            fh.write(row.tobytes())


def read_embeddings(path: str | Path) -> EmbeddingBatch:
    """Read and validate a GBEM file; rows come back as float64."""
    data = Path(path).read_bytes()

    def need(n: int, offset: int, what: str) -> bytes:
        if offset + n > len(data):
            raise EmbeddingFormatError(f"{path}: truncated while reading {what}")
        return data[offset : offset + n]

    if need(4, 0, "magic") != GBEM_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {data[:4]!r}, expected {GBEM_MAGIC!r}")
    version = need(1, 4, "version")[0]
    if version != GBEM_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    tag = need(1, 5, "view tag")[0]
    if tag not in _TAG_VIEWS:
        raise EmbeddingFormatError(f"{path}: unknown view tag {tag}")
    count = struct.unpack("<Q", need(8, 6, "count"))[0]
    dim = struct.unpack("<I", need(4, 14, "dimension"))[0]
    if dim == 0:
        raise EmbeddingFormatError(f"{path}: zero dimension")
    record = 8 + 4 * dim
    body = need(count * record, 18, f"{count} records")
    if len(data) != 18 + count * record:
        raise EmbeddingFormatError(f"{path}: {len(data) - 18 - count * record} trailing bytes")

    ids = []
    matrix = np.empty((count, dim), dtype=np.float64)
    for i in range(count):
        off = i * record
        ids.append(struct.unpack("<Q", body[off : off + 8])[0])
        matrix[i] = np.frombuffer(body, dtype="<f4", count=dim, offset=off + 8)
    if len(set(ids)) != len(ids):
        raise EmbeddingFormatError(f"{path}: duplicate record ids")
    norms = np.linalg.norm(matrix, axis=1)
    bad = np.where(np.abs(norms - 1.0) > UNIT_NORM_TOL)[0]
    if bad.size:
        i = int(bad[0])
        raise EmbeddingFormatError(
            f"{path}: record {i} (id {ids[i]}) is not unit-norm (norm={norms[i]!r})"
        )
    view = _TAG_VIEWS[tag]
    return EmbeddingBatch(view=view, ids=tuple(ids), matrix=matrix)
