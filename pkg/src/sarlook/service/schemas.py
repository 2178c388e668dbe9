"""Pydantic request/response models for the HTTP API."""
from __future__ import annotations

from pydantic import BaseModel, Field, field_validator

from ..encoder import ENCODER_TAGS, REPRESENTATION_TAGS


class MetaModel(BaseModel):
    class_label: int | None = None
    class_abbrev: str | None = None
    lat: float | None = None
    lon: float | None = None
    timestamp: str | None = None


class HealthResponse(BaseModel):
    status: str
    index_versions: dict[str, str]


class VignetteSummary(BaseModel):
    id: str
    meta: MetaModel


class VignetteListResponse(BaseModel):
    total: int
    limit: int
    offset: int
    items: list[VignetteSummary]


class QueryRequest(BaseModel):
    id: str | None = None
    embedding: list[float] | None = None
    k: int = Field(default=10, ge=1, le=1000)
    rep: str = "SUBAP"
    enc: str = "BASELINE"

    @field_validator("rep")
    @classmethod
    def _check_rep(cls, v: str) -> str:
        if v not in REPRESENTATION_TAGS:
            raise ValueError(f"rep must be one of {REPRESENTATION_TAGS}")
        return v

    @field_validator("enc")
    @classmethod
    def _check_enc(cls, v: str) -> str:
        if v not in ENCODER_TAGS:
            raise ValueError(f"enc must be one of {ENCODER_TAGS}")
        return v


class QueryResultItem(BaseModel):
    id: str
    similarity: float
    rank: int
    meta: MetaModel
    thumbnail_url: str


class QueryResponse(BaseModel):
    query_id: str | None
    rep: str
    enc: str
    k: int
    results: list[QueryResultItem]


class IngestResponse(BaseModel):
    id: str
    representations: list[str]
    encoders: list[str]
