"""Request/response schemas for the review service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ViolationModel(BaseModel):
    frame: int
    message: str


class PendingModel(BaseModel):
    frame: int
    markers: list[str]


class ValidationReport(BaseModel):
    ok: bool
    violations: list[ViolationModel] = Field(default_factory=list)
    pending: list[PendingModel] = Field(default_factory=list)


class SegmentModel(BaseModel):
    index: int
    t_start: float
    t_end: float
    instruction: str


class FrameModel(BaseModel):
    index: int
    task: str
    label: str
    transition: Optional[list[str]] = None
    transition_codes: Optional[list[str]] = None
    slots: dict[str, Any] = Field(default_factory=dict)
    pending_review: list[str] = Field(default_factory=list)


class SessionSummary(BaseModel):
    id: str
    recording: str
    frames: int
    edits: int
    ok: bool
    pending: int


class SessionDetail(BaseModel):
    id: str
    recording: str
    actor: str
    object: str
    segments: list[SegmentModel]
    frames: list[FrameModel]
    report: ValidationReport
    edits: int
    activity: list[float]
    sample_rate: float
    pauses: list[float]


class LabanRowModel(BaseModel):
    t: float
    tokens: dict[str, str]


class LabanView(BaseModel):
    columns: list[str]
    rows: list[LabanRowModel]
    text: str


class PatchFrameRequest(BaseModel):
    task: Optional[str] = None
    slots: dict[str, Any] = Field(default_factory=dict)


class PatchFrameResponse(BaseModel):
    frame: FrameModel
    report: ValidationReport


class ExportRequest(BaseModel):
    force: bool = False


class ExportResponse(BaseModel):
    program: dict
    text: str
    path: str
    warnings: list[str] = Field(default_factory=list)


class RefusalResponse(BaseModel):
    refused: bool = True
    report: ValidationReport


class ErrorResponse(BaseModel):
    error: str
    message: str
