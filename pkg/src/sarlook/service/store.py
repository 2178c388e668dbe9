"""On-disk data store shared by the CLI pipeline and the HTTP service.

Layout under one root directory:

    vignettes/{id}.sarv (+ .sarv.json sidecar)
    stacks/{REP}/{id}.{channel}.f32 (+ .json descriptor)
    checkpoints/{REP}.saec
    embeddings/{REP}_{ENC}.jsonl
    indexes/{REP}_{ENC}.srix
    cache/thumbs/{id}_{REP}_{version}.png

Stacks are stored as raw (un-normalized) decimated grids in the flat-f32
raster format; normalization happens when a stack is loaded for encoding.
"""
from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from ..encoder import (
    ENCODER_TAGS,
    REPRESENTATION_TAGS,
    Embedding,
    InputStack,
    build_representation_stacks,
    load_checkpoint,
    normalize_stack,
)
from ..preprocess import read_raster, write_raster
from ..retrieval import RetrievalIndex, load_index, save_index
from ..vignette import ComplexVignette, VignetteMeta, read_vignette, write_vignette

_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,128}$")


def check_vignette_id(vid: str) -> str:
    if not _ID_RE.match(vid):
        raise ValueError(f"invalid vignette id {vid!r} (letters, digits, . _ - only)")
    return vid


class DataStore:
    def __init__(self, root: str | Path, create: bool = False):
        self.root = Path(root)
        if create:
            for sub in ("vignettes", "stacks", "checkpoints", "embeddings",
                        "indexes", "cache/thumbs"):
                (self.root / sub).mkdir(parents=True, exist_ok=True)
        elif not self.root.is_dir():
            raise FileNotFoundError(f"data directory does not exist: {self.root}")

    # -- vignettes ---------------------------------------------------------

    def vignette_path(self, vid: str) -> Path:
        return self.root / "vignettes" / f"{check_vignette_id(vid)}.sarv"

    def has_vignette(self, vid: str) -> bool:
        return self.vignette_path(vid).exists()

    def add_vignette(self, v: ComplexVignette) -> None:
        path = self.vignette_path(v.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_vignette(v, path)

    def load_vignette(self, vid: str) -> ComplexVignette:
        return read_vignette(self.vignette_path(vid))

    def list_vignettes(self) -> list[tuple[str, VignetteMeta]]:
        """(id, meta) pairs sorted by id, read from the JSON sidecars."""
        out = []
        vdir = self.root / "vignettes"
        if vdir.is_dir():
            for sidecar in sorted(vdir.glob("*.sarv.json")):
                d = json.loads(sidecar.read_text())
                out.append((d["id"], VignetteMeta.from_dict(d)))
        return out

    # -- stacks ------------------------------------------------------------

    def _stack_channel_path(self, vid: str, rep: str, channel: int) -> Path:
        return self.root / "stacks" / rep / f"{vid}.{channel}.f32"

    def save_stack_grids(self, vid: str, rep: str, grids: np.ndarray,
                         pixel_spacing_m: float, prf: float | None = None) -> None:
        """Raw decimated grids, one raster per channel."""
        check_vignette_id(vid)
        (self.root / "stacks" / rep).mkdir(parents=True, exist_ok=True)
        n_sub = grids.shape[0] if grids.ndim == 3 else 1
        grids = np.atleast_3d(grids) if grids.ndim == 2 else grids
        for ch in range(n_sub):
            desc = {"source_id": vid, "subaperture_index": ch if n_sub > 1 else None}
            if rep.startswith("DOP"):
                desc["prf"] = prf
            else:
                desc["pixel_spacing_m"] = pixel_spacing_m
            write_raster(grids[ch], self._stack_channel_path(vid, rep, ch), desc)

    def has_stack(self, vid: str, rep: str) -> bool:
        return self._stack_channel_path(vid, rep, 0).exists()

    def load_stack_grids(self, vid: str, rep: str) -> np.ndarray:
        grids = []
        ch = 0
        while self._stack_channel_path(vid, rep, ch).exists():
            grid, _ = read_raster(self._stack_channel_path(vid, rep, ch))
            grids.append(grid)
            ch += 1
        if not grids:
            raise FileNotFoundError(f"no {rep} stack stored for {vid!r}")
        return np.stack(grids)

    def load_stack(self, vid: str, rep: str) -> InputStack:
        return normalize_stack(self.load_stack_grids(vid, rep), vid, rep)

    def compute_and_save_stacks(self, v: ComplexVignette, n_sub: int = 4,
                                k: int = 10) -> dict[str, InputStack]:
        stacks = build_representation_stacks(v, n_sub=n_sub, k=k)
        for rep, s in stacks.items():
            raw = self._denormalize(s)
            self.save_stack_grids(v.id, rep, raw, pixel_spacing_m=v.azimuth_spacing * k,
                                  prf=v.prf)
        return stacks

    @staticmethod
    def _denormalize(s: InputStack) -> np.ndarray:
        out = np.empty_like(s.channels)
        for c, (mu, sd) in enumerate(s.normalization_stats):
            out[c] = s.channels[c] * sd + mu
        return out

    # -- checkpoints ---------------------------------------------------------

    def checkpoint_path(self, rep: str) -> Path:
        return self.root / "checkpoints" / f"{rep}.saec"

    def has_checkpoint(self, rep: str) -> bool:
        return self.checkpoint_path(rep).exists()

    def load_model(self, rep: str):
        return load_checkpoint(self.checkpoint_path(rep))

    # -- embeddings -----------------------------------------------------------

    def embeddings_path(self, rep: str, enc: str) -> Path:
        return self.root / "embeddings" / f"{rep}_{enc}.jsonl"

    def save_embeddings(self, embs: list[Embedding]) -> Path:
        if not embs:
            raise ValueError("no embeddings to save")
        rep, enc = embs[0].representation_tag, embs[0].encoder_tag
        path = self.embeddings_path(rep, enc)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            for e in embs:
                fh.write(json.dumps({
                    "id": e.id,
                    "rep": e.representation_tag,
                    "enc": e.encoder_tag,
                    "version": e.encoder_version,
                    "vector": [float(x) for x in e.vector],
                }, sort_keys=True) + "\n")
        return path

    def load_embeddings(self, rep: str, enc: str) -> list[Embedding]:
        path = self.embeddings_path(rep, enc)
        out = []
        for line in path.read_text().splitlines():
            d = json.loads(line)
            out.append(Embedding(id=d["id"], vector=np.asarray(d["vector"]),
                                 representation_tag=d["rep"], encoder_tag=d["enc"],
                                 encoder_version=d["version"]))
        return out

    # -- indexes ---------------------------------------------------------------

    def index_path(self, rep: str, enc: str) -> Path:
        return self.root / "indexes" / f"{rep}_{enc}.srix"

    def save_index(self, idx: RetrievalIndex) -> Path:
        path = self.index_path(idx.representation_tag, idx.encoder_tag)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_index(idx, path)
        return path

    def load_indexes(self) -> dict[tuple[str, str], RetrievalIndex]:
        out = {}
        for rep in REPRESENTATION_TAGS:
            for enc in ENCODER_TAGS:
                path = self.index_path(rep, enc)
                if path.exists():
                    out[(rep, enc)] = load_index(path)
        return out

    # -- thumbnail cache -------------------------------------------------------

    def thumbnail_path(self, vid: str, rep: str, version: str) -> Path:
        return self.root / "cache" / "thumbs" / f"{check_vignette_id(vid)}_{rep}_{version}.png"
