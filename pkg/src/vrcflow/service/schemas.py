"""Pydantic request/response models for the toolchain service."""
from __future__ import annotations

from pydantic import BaseModel, Field


class MergeRequest(BaseModel):
    inputs: list[str] = Field(min_length=1,
                              description="XDF files to merge, server-side paths")
    out_dir: str
    base_address: int = 0x43C00000
    fu_monitors: bool = False


class MergeResponse(BaseModel):
    merged_xdf: str
    ctab: str
    mdc_info: str
    configurations: dict[str, int]
    functional_actors: int
    sbox_count: int
    events: int


class RunRequest(BaseModel):
    manifest: str = Field(description="run manifest path on the server")


class ThroughputStats(BaseModel):
    fps_mean: float
    fps_std: float


class OverheadStats(BaseModel):
    monitored_fps: float
    monitored_std: float
    unmonitored_fps: float
    unmonitored_std: float
    overhead_pct: float
    table: str


class RunResponse(BaseModel):
    iterations: int
    monitoring: str
    kernel: str
    rows_written: int
    csv_dir: str | None
    frames_out: str
    report: str
    throughput: ThroughputStats
    firings_per_iteration: dict[str, int]
    overhead: OverheadStats | None = None


class ReportRequest(BaseModel):
    csv_dir: str
    event: str | None = None


class ActorStats(BaseModel):
    actor: str
    count: int
    mean_ns: float
    max_ns: int
    event_totals: dict[str, int]


class TimelinePoint(BaseModel):
    tstart: int
    actor: str
    value: int


class ReportResponse(BaseModel):
    text: str
    total_rows: int
    actors: list[ActorStats]
    timeline: list[TimelinePoint] | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
