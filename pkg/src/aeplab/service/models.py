"""Pydantic request/response models for the service endpoints.

Channels travel as the plain-text spec format (see specfile), so the service
stays stateless and the CLI can forward files verbatim.  Binary payloads
(codebook files, compressed streams) are base64 inside JSON.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class InfoRequest(BaseModel):
    spec_text: str


class InfoResponse(BaseModel):
    h0_x: float
    h0_y: float
    h0_xy: float
    h0_y_given_x: float
    i0_xy: float
    capacity: float
    capacity_input: dict[str, float]


class TypicalSetRequest(BaseModel):
    spec_text: str
    n: int = Field(ge=1)
    epsilon: float | None = None
    side: Literal["input", "output"] = "output"


class CodebookGenerateRequest(BaseModel):
    spec_text: str
    n: int = Field(ge=1)
    rate: float | None = None
    epsilon: float | None = None
    seed: int


class CodebookCheckRequest(BaseModel):
    spec_text: str
    codebook_b64: str
    epsilon: float | None = None


class ExperimentRequest(BaseModel):
    spec_text: str
    n_grid: list[int]
    rates: list[float] = []
    epsilon: float | None = None
    codebooks: int = Field(default=20, ge=1)
    trials: int = Field(default=1000, ge=1)
    seed: int
    workers: int = Field(default=1, ge=1)
    mc: bool = False  # lemma4 only: force the Monte Carlo estimator


class RelayEncodeRequest(BaseModel):
    spec_text: str
    epsilon: float | None = None
    blocks: list[list[str]]


class RelayEncodeResponse(BaseModel):
    stream_b64: str
    index_bits: int
    raw_bits: int


class RelayDecodeRequest(BaseModel):
    spec_text: str
    stream_b64: str


class RelayDecodeResponse(BaseModel):
    blocks: list[list[str]]
    epsilon: float


class HealthResponse(BaseModel):
    status: str
    version: str
