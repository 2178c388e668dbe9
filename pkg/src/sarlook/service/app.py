"""HTTP service: ingest, query-by-example and thumbnails over a data store.

Indexes are loaded once at startup and swapped atomically after an ingest;
in-flight queries keep the snapshot they started with. Ingest is serialized
by a lock. Query-by-id resolves the precomputed embedding from the live
index (the database processing stages run once, not per query).
"""
from __future__ import annotations

import hashlib
import json
import tempfile
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, Query, UploadFile
from fastapi.responses import Response
from fastapi.staticfiles import StaticFiles

from ..encoder import (
    ENCODER_TAGS,
    REPRESENTATION_TAGS,
    Embedding,
    baseline_descriptor,
)
from ..encoder.training import embed_stack
from ..retrieval import RetrievalIndex, build_index, query as run_query
from ..vignette import CLASS_ABBREV, FormatError, VignetteMeta, read_vignette
from .schemas import (
    HealthResponse,
    IngestResponse,
    MetaModel,
    QueryRequest,
    QueryResponse,
    QueryResultItem,
    VignetteListResponse,
    VignetteSummary,
)
from .store import DataStore
from .thumbnails import STRETCH_VERSION, render_thumbnail_png

MAX_UPLOAD_BYTES = 64 * 1024 * 1024


def _index_version(idx: RetrievalIndex) -> str:
    digest = hashlib.sha256()
    for vid in idx.ids:
        digest.update(vid.encode())
    digest.update(idx.vectors.tobytes())
    return f"v{len(idx)}-{digest.hexdigest()[:8]}"


def _meta_model(meta: VignetteMeta) -> MetaModel:
    return MetaModel(
        class_label=meta.class_label,
        class_abbrev=CLASS_ABBREV[meta.class_label] if meta.class_label is not None else None,
        lat=meta.lat,
        lon=meta.lon,
        timestamp=meta.timestamp,
    )


class ServiceState:
    def __init__(self, store: DataStore):
        self.store = store
        self.indexes = store.load_indexes()
        self.models = {}
        for rep in REPRESENTATION_TAGS:
            if store.has_checkpoint(rep):
                self.models[rep] = store.load_model(rep)
        self.vignette_meta = dict(store.list_vignettes())
        self.ingest_lock = threading.Lock()

    def index_for(self, rep: str, enc: str) -> RetrievalIndex:
        idx = self.indexes.get((rep, enc))
        if idx is None:
            raise HTTPException(
                status_code=503,
                detail=f"no index available for rep={rep} enc={enc}",
            )
        return idx

    def embed_all(self, stacks: dict) -> list[Embedding]:
        out = []
        for rep, stack in stacks.items():
            out.append(baseline_descriptor(stack))
            model = self.models.get(rep)
            if model is not None and stack.shape == (model.cfg.input_channels,
                                                     model.cfg.input_height,
                                                     model.cfg.input_width):
                out.append(embed_stack(model, stack))
        return out


def create_app(data_dir: str | Path, frontend_dist: str | Path | None = None) -> FastAPI:
    store = DataStore(data_dir, create=True)
    state = ServiceState(store)
    app = FastAPI(title="sarlook", version="0.1.0")
    app.state.service = state

    @app.get("/api/health", response_model=HealthResponse)
    def health():
        return HealthResponse(
            status="ok",
            index_versions={
                f"{rep}_{enc}": _index_version(idx)
                for (rep, enc), idx in sorted(state.indexes.items())
            },
        )

    @app.get("/api/vignettes", response_model=VignetteListResponse)
    def list_vignettes(
        class_label: int | None = Query(default=None, alias="class", ge=0, le=9),
        limit: int = Query(default=24, ge=1, le=500),
        offset: int = Query(default=0, ge=0),
    ):
        items = sorted(state.vignette_meta.items())
        if class_label is not None:
            items = [(vid, m) for vid, m in items if m.class_label == class_label]
        page = items[offset:offset + limit]
        return VignetteListResponse(
            total=len(items),
            limit=limit,
            offset=offset,
            items=[VignetteSummary(id=vid, meta=_meta_model(m)) for vid, m in page],
        )

    @app.get("/api/vignettes/{vid}/thumbnail")
    def thumbnail(vid: str, rep: str = Query(default="VIG")):
        if rep not in REPRESENTATION_TAGS:
            raise HTTPException(400, f"rep must be one of {REPRESENTATION_TAGS}")
        if vid not in state.vignette_meta:
            raise HTTPException(404, f"unknown vignette id {vid!r}")
        cache = store.thumbnail_path(vid, rep, STRETCH_VERSION)
        if cache.exists():
            return Response(cache.read_bytes(), media_type="image/png")
        try:
            grids = store.load_stack_grids(vid, rep)
        except FileNotFoundError as exc:
            raise HTTPException(404, str(exc)) from exc
        png = render_thumbnail_png(grids, rep)
        cache.parent.mkdir(parents=True, exist_ok=True)
        cache.write_bytes(png)
        return Response(png, media_type="image/png")

    @app.post("/api/query", response_model=QueryResponse)
    def query_endpoint(req: QueryRequest):
        if (req.id is None) == (req.embedding is None):
            raise HTTPException(400, "exactly one of 'id' and 'embedding' is required")
        idx = state.index_for(req.rep, req.enc)
        exclude = None
        if req.id is not None:
            if req.id not in idx:
                raise HTTPException(404, f"id {req.id!r} is not indexed for "
                                         f"rep={req.rep} enc={req.enc}")
            q_vec = idx.vector_for(req.id)
            exclude = req.id
        else:
            q_vec = np.asarray(req.embedding, dtype=np.float64)
        try:
            results = run_query(idx, q_vec, req.k, exclude_id=exclude)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        return QueryResponse(
            query_id=req.id,
            rep=req.rep,
            enc=req.enc,
            k=req.k,
            results=[
                QueryResultItem(
                    id=r.id,
                    similarity=r.similarity,
                    rank=r.rank,
                    meta=_meta_model(r.meta),
                    thumbnail_url=f"/api/vignettes/{r.id}/thumbnail?rep={req.rep}",
                )
                for r in results
            ],
        )

    @app.post("/api/ingest", response_model=IngestResponse)
    def ingest(file: UploadFile = File(...), meta: str = Form(default="{}")):
        payload = file.file.read(MAX_UPLOAD_BYTES + 1)
        if len(payload) > MAX_UPLOAD_BYTES:
            raise HTTPException(400, "upload exceeds the size cap")
        try:
            meta_dict = json.loads(meta)
        except json.JSONDecodeError as exc:
            raise HTTPException(400, f"meta is not valid JSON: {exc}") from exc
        with state.ingest_lock:
            with tempfile.TemporaryDirectory() as tmp:
                tmp_path = Path(tmp) / "upload.sarv"
                tmp_path.write_bytes(payload)
                sidecar = {"id": meta_dict.get("id", "upload"), **meta_dict}
                (Path(tmp) / "upload.sarv.json").write_text(json.dumps(sidecar))
                try:
                    v = read_vignette(tmp_path)
                except (FormatError, ValueError) as exc:
                    raise HTTPException(400, f"bad SARV upload: {exc}") from exc
            if store.has_vignette(v.id):
                raise HTTPException(409, f"vignette id {v.id!r} already ingested")

            store.add_vignette(v)
            stacks = store.compute_and_save_stacks(v)
            new_embeddings = state.embed_all(stacks)

            new_indexes = dict(state.indexes)
            for emb in new_embeddings:
                key = (emb.representation_tag, emb.encoder_tag)
                old = new_indexes.get(key)
                items = []
                if old is not None:
                    if old.dimension != emb.dimension:
                        continue  # incompatible encoder output for this store
                    items = [
                        (Embedding(id=old.ids[i], vector=old.vectors[i].astype(np.float64),
                                   representation_tag=old.representation_tag,
                                   encoder_tag=old.encoder_tag, encoder_version="stored"),
                         old.metas[i])
                        for i in range(len(old))
                    ]
                items.append((emb, v.meta))
                rebuilt = build_index(items)
                store.save_index(rebuilt)
                new_indexes[key] = rebuilt
            # atomic swap: readers either see the old dict or the new one
            state.indexes = new_indexes
            state.vignette_meta[v.id] = v.meta
        return IngestResponse(
            id=v.id,
            representations=list(stacks.keys()),
            encoders=[enc for enc in ENCODER_TAGS
                      if any(e.encoder_tag == enc for e in new_embeddings)],
        )

    if frontend_dist is None:
        candidate = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        frontend_dist = candidate if candidate.is_dir() else None
    if frontend_dist is not None and Path(frontend_dist).is_dir():
        app.mount("/", StaticFiles(directory=str(frontend_dist), html=True), name="ui")

    return app
