"""Run manifest: the INI file describing one monitored application run.

    [run]
    merged = out/merged.xdf          ; merged-network XDF
    ctab = out/ctab.txt              ; configuration table sidecar
    mdcinfo = out/mdcInfo.xml        ; monitor-component configuration
    frames = clip.yuv                ; raw YUV 4:2:0 frame source
    width = 352
    height = 288
    block = 32
    kernel = roberts                 ; which configuration to run
    iterations = 1
    monitoring = on                  ; on | off | both
    out_dir = results
    base_address = 0x43c00000
    fu_monitors = off                ; per-FU firing counters

    [mapping]                        ; optional
    Read_YUV = Core0
    display = Core0
    * = Core1                        ; default for remaining software actors
    colocate = Split,Merge           ; comma-separated group, repeatable as
                                     ; colocate2, colocate3, ...

    [events]                         ; optional event selections
    sw = PAPI_TOT_INS,PAPI_TOT_CYC
    hw = MDC_CLOCK_CYCLE,MDC_INPUT_TOKENS,MDC_OUTPUT_TOKENS
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestError

MONITOR_MODES = ("on", "off", "both")


@dataclass
class RunManifest:
    merged: Path
    ctab: Path
    mdcinfo: Path
    frames: Path
    width: int
    height: int
    block: int = 32
    kernel: str = "roberts"
    iterations: int = 1
    monitoring: str = "on"
    out_dir: Path = Path("results")
    base_address: int = 0x43C00000
    fu_monitors: bool = False
    mapping: dict[str, str] = field(default_factory=dict)
    default_core: str | None = None
    colocate: list[list[str]] = field(default_factory=list)
    events_sw: list[str] | None = None
    events_hw: list[str] | None = None


def _split_list(raw: str) -> list[str]:
    return [item.strip() for item in raw.split(",") if item.strip()]


def load_manifest(path) -> RunManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    cp = configparser.ConfigParser()
    cp.optionxform = str  # actor and PE names are case-sensitive
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    if "run" not in cp:
        raise ManifestError(f"{path}: missing [run] section")
    run = cp["run"]

    def need(key: str) -> str:
        if key not in run:
            raise ManifestError(f"{path}: [run] is missing {key!r}")
        return run[key]

    base_dir = path.parent

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else base_dir / q

    try:
        m = RunManifest(
            merged=resolve(need("merged")),
            ctab=resolve(need("ctab")),
            mdcinfo=resolve(need("mdcinfo")),
            frames=resolve(need("frames")),
            width=int(need("width")),
            height=int(need("height")),
            block=int(run.get("block", "32")),
            kernel=run.get("kernel", "roberts"),
            iterations=int(run.get("iterations", "1")),
            monitoring=run.get("monitoring", "on").lower(),
            out_dir=resolve(run.get("out_dir", "results")),
            base_address=int(run.get("base_address", "0x43c00000"), 0),
            fu_monitors=run.getboolean("fu_monitors", fallback=False),
        )
    except ValueError as exc:
        raise ManifestError(f"{path}: {exc}") from exc

    if m.monitoring not in MONITOR_MODES:
        raise ManifestError(
            f"{path}: monitoring must be one of {MONITOR_MODES}, "
            f"got {m.monitoring!r}")
    if m.base_address % 4:
        raise ManifestError(f"{path}: base_address must be word aligned")
    if m.iterations < 1:
        raise ManifestError(f"{path}: iterations must be >= 1")
    for key in ("merged", "ctab", "mdcinfo", "frames"):
        p: Path = getattr(m, key)
        if not p.exists():
            raise ManifestError(f"{path}: {key} file not found: {p}")

    if "mapping" in cp:
        for key, value in cp["mapping"].items():
            if key.startswith("colocate"):
                m.colocate.append(_split_list(value))
            elif key == "*":
                m.default_core = value.strip()
            else:
                m.mapping[key] = value.strip()
    if "events" in cp:
        if "sw" in cp["events"]:
            m.events_sw = _split_list(cp["events"]["sw"])
        if "hw" in cp["events"]:
            m.events_hw = _split_list(cp["events"]["hw"])
    return m
