"""Cosine-similarity retrieval index with binary persistence.

The index is an exhaustive scan: vectors are stored as float32, similarity
is computed in double precision, results sort by similarity descending with
ties broken by id ascending, which makes rankings total-ordered and
platform independent. The index is immutable once built.

SRIX file layout (little-endian):

    magic     4 bytes  b"SRIX"
    version   u16      currently 1
    dimension u32
    count     u32
    entries   count times:
        id_len u32, id UTF-8 bytes,
        representation_tag u8, encoder_tag u8,
        vector f32[dimension],
        meta_len u32, meta JSON UTF-8
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .encoder.stacks import ENCODER_TAGS, REPRESENTATION_TAGS, Embedding
from .vignette import FormatError, VignetteMeta

INDEX_MAGIC = b"SRIX"
INDEX_VERSION = 1
_INDEX_HEAD = struct.Struct("<4sHII")

_REP_CODE = {tag: i for i, tag in enumerate(REPRESENTATION_TAGS)}
_ENC_CODE = {tag: i for i, tag in enumerate(ENCODER_TAGS)}


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """(a . b) / (|a| |b|), clamped to [-1, 1] against rounding."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm vectors")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class RankedResult:
    id: str
    similarity: float
    rank: int
    meta: VignetteMeta


class RetrievalIndex:
    """Immutable collection of (id, embedding, meta) supporting top-k queries."""

    def __init__(
        self,
        ids: list[str],
        vectors: np.ndarray,
        metas: list[VignetteMeta],
        representation_tag: str,
        encoder_tag: str,
        version: str = "1",
    ):
        vectors = np.asarray(vectors, dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(ids) or len(metas) != len(ids):
            raise ValueError("ids, vectors and metas must align")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("index vectors must be finite")
        norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
        if np.any(norms == 0):
            bad = ids[int(np.argmin(norms))]
            raise ValueError(f"zero-norm embedding rejected at insert: {bad!r}")
        seen = set()
        for i in ids:
            if i in seen:
                raise ValueError(f"duplicate id {i!r}")
            seen.add(i)
        self.ids = list(ids)
        self.vectors = vectors
        self.metas = list(metas)
        self.representation_tag = representation_tag
        self.encoder_tag = encoder_tag
        self.version = version
        self._norms = norms
        self._id_pos = {i: pos for pos, i in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def vector_for(self, item_id: str) -> np.ndarray:
        pos = self._id_pos.get(item_id)
        if pos is None:
            raise KeyError(f"unknown id {item_id!r}")
        return self.vectors[pos].astype(np.float64)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._id_pos


def build_index(items: Sequence[tuple[Embedding, VignetteMeta | None]]) -> RetrievalIndex:
    """Index over (embedding, meta) pairs; order of insertion is irrelevant
    to query results thanks to the deterministic tie rule."""
    items = list(items)
    if not items:
        raise ValueError("cannot build an empty index")
    reps = {e.representation_tag for e, _ in items}
    encs = {e.encoder_tag for e, _ in items}
    dims = {e.dimension for e, _ in items}
    if len(reps) != 1 or len(encs) != 1:
        raise ValueError(f"mixed tags in index input: reps={sorted(reps)} encs={sorted(encs)}")
    if len(dims) != 1:
        raise ValueError(f"inconsistent embedding dimensions: {sorted(dims)}")
    return RetrievalIndex(
        ids=[e.id for e, _ in items],
        vectors=np.stack([e.vector for e, _ in items]).astype(np.float32),
        metas=[m if m is not None else VignetteMeta() for _, m in items],
        representation_tag=reps.pop(),
        encoder_tag=encs.pop(),
    )


def query(
    idx: RetrievalIndex,
    q: Embedding | np.ndarray,
    n_max: int,
    exclude_id: str | None = None,
) -> list[RankedResult]:
    """Exhaustive top-n_max scan, sorted by similarity descending, ties by id.

    The query's own id, when indexed, is returned unless ``exclude_id``
    filters it out (evaluation and query-by-id do the exclusion).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    q_vec = q.vector if isinstance(q, Embedding) else np.asarray(q, dtype=np.float64).ravel()
    if q_vec.shape[0] != idx.dimension:
        raise ValueError(f"query dim {q_vec.shape[0]} != index dim {idx.dimension}")
    qn = np.linalg.norm(q_vec)
    if qn == 0.0:
        raise ValueError("cosine similarity undefined for zero-norm query")
    sims = idx.vectors.astype(np.float64) @ (q_vec / qn)
    sims = np.clip(sims / idx._norms, -1.0, 1.0)
    order = sorted(range(len(idx)), key=lambda i: (-sims[i], idx.ids[i]))
    results: list[RankedResult] = []
    for i in order:
        if exclude_id is not None and idx.ids[i] == exclude_id:
            continue
        results.append(
            RankedResult(id=idx.ids[i], similarity=float(sims[i]), rank=len(results) + 1, meta=idx.metas[i])
        )
        if len(results) == n_max:
            break
    return results


def save_index(idx: RetrievalIndex, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(_INDEX_HEAD.pack(INDEX_MAGIC, INDEX_VERSION, idx.dimension, len(idx)))
        rep_code = _REP_CODE[idx.representation_tag]
        enc_code = _ENC_CODE[idx.encoder_tag]
        for i in range(len(idx)):
            id_bytes = idx.ids[i].encode()
            meta_bytes = json.dumps(idx.metas[i].to_dict(), sort_keys=True).encode()
            fh.write(struct.pack("<I", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(struct.pack("<BB", rep_code, enc_code))
            fh.write(np.ascontiguousarray(idx.vectors[i], dtype="<f4").tobytes())
            fh.write(struct.pack("<I", len(meta_bytes)))
            fh.write(meta_bytes)


def load_index(path: str | Path) -> RetrievalIndex:
    raw = Path(path).read_bytes()
    if len(raw) < _INDEX_HEAD.size:
        raise FormatError(f"{path}: not an index file")
    magic, version, dim, count = _INDEX_HEAD.unpack_from(raw)
    if magic != INDEX_MAGIC:
        raise FormatError(f"{path}: bad index magic {magic!r}")
    if version != INDEX_VERSION:
        raise FormatError(f"{path}: unsupported index version {version}")
    pos = _INDEX_HEAD.size
    ids: list[str] = []
    vectors = np.empty((count, dim), dtype=np.float32)
    metas: list[VignetteMeta] = []
    rep_codes = set()
    enc_codes = set()
    try:
        for i in range(count):
            (id_len,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            ids.append(raw[pos:pos + id_len].decode())
            pos += id_len
            rep_c, enc_c = struct.unpack_from("<BB", raw, pos)
            pos += 2
            rep_codes.add(rep_c)
            enc_codes.add(enc_c)
            vec_bytes = raw[pos:pos + 4 * dim]
            if len(vec_bytes) != 4 * dim:
                raise FormatError(f"{path}: truncated vector for entry {i}")
            vectors[i] = np.frombuffer(vec_bytes, dtype="<f4")
            pos += 4 * dim
            (meta_len,) = struct.unpack_from("<I", raw, pos)
            pos += 4
            metas.append(VignetteMeta.from_dict(json.loads(raw[pos:pos + meta_len])))
            pos += meta_len
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: truncated or corrupt index: {exc}") from exc
    if pos != len(raw):
        raise FormatError(f"{path}: {len(raw) - pos} trailing bytes after last entry")
    if count and (len(rep_codes) != 1 or len(enc_codes) != 1):
        raise FormatError(f"{path}: mixed representation/encoder tags")
    rep = REPRESENTATION_TAGS[rep_codes.pop()] if count else REPRESENTATION_TAGS[0]
    enc = ENCODER_TAGS[enc_codes.pop()] if count else ENCODER_TAGS[0]
    return RetrievalIndex(ids=ids, vectors=vectors, metas=metas,
                          representation_tag=rep, encoder_tag=enc)
