"""Toolchain orchestration: the operations behind the service endpoints
(and, through them, the CLI subcommands)."""
from __future__ import annotations

import json
import statistics
from pathlib import Path

from .device import DEFAULT_BASE_ADDRESS, VrcDevice
from .drivers import emit_mdc_info, generate_drivers
from .edgedetect import YuvReader
from .errors import ManifestError
from .manifest import RunManifest, load_manifest
from .merger import format_ctab, merge, parse_ctab
from .monitoring import (EventLib, SwCore, SwCoreComponent,
                         load_mdc_component)
from .report import format_summary, format_timeline, summarize, timeline
from .runtime import (HwPe, MappingConstraints, Platform, build_edge_app,
                      execute_iteration, map_actors, measure_overhead)
from .xdf import parse_xdf, serialize_xdf

MERGED_XDF = "merged.xdf"
CTAB_FILE = "ctab.txt"
MDCINFO_FILE = "mdcInfo.xml"

DEFAULT_SW_EVENTS = ["PAPI_TOT_INS", "PAPI_TOT_CYC"]
DEFAULT_HW_EVENTS = ["MDC_CLOCK_CYCLE", "MDC_INPUT_TOKENS",
                     "MDC_OUTPUT_TOKENS"]


def merge_networks(inputs: list[str], out_dir: str,
                   base_address: int = DEFAULT_BASE_ADDRESS,
                   fu_monitors: bool = False) -> dict:
    """Merge N XDF files; writes merged.xdf, ctab.txt and mdcInfo.xml."""
    graphs = []
    for path in inputs:
        p = Path(path)
        if not p.exists():
            raise ManifestError(f"input file not found: {p}")
        graphs.append(parse_xdf(p.read_text(encoding="utf-8")))
    merged, table = merge(graphs)
    device = VrcDevice(merged, table, base_address=base_address,
                       fu_monitors=fu_monitors)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    merged_path = out / MERGED_XDF
    ctab_path = out / CTAB_FILE
    info_path = out / MDCINFO_FILE
    merged_path.write_text(serialize_xdf(merged.graph), encoding="utf-8")
    ctab_path.write_text(format_ctab(merged, table), encoding="utf-8")
    info_path.write_text(emit_mdc_info(device), encoding="utf-8")

    functional = merged.functional_actors()
    return {
        "merged_xdf": str(merged_path),
        "ctab": str(ctab_path),
        "mdc_info": str(info_path),
        "configurations": {name: cid for name, cid in merged.source_ids.items()},
        "functional_actors": len(functional),
        "sbox_count": len(merged.sbox_list),
        "events": len(device.event_catalog()),
    }


def _load_artifacts(m: RunManifest):
    graph = parse_xdf(m.merged.read_text(encoding="utf-8"))
    merged, table = parse_ctab(m.ctab.read_text(encoding="utf-8"), graph)
    device = VrcDevice(merged, table, base_address=m.base_address,
                       fu_monitors=m.fu_monitors)
    descriptors = {d.config_name: d for d in generate_drivers(merged, table)}
    return merged, table, device, descriptors


def _build_session(m: RunManifest):
    merged, table, device, descriptors = _load_artifacts(m)
    if m.kernel not in descriptors:
        raise ManifestError(
            f"kernel {m.kernel!r} is not a configuration of the merged "
            f"network (have: {sorted(descriptors)})")
    cores = [SwCore("Core0", 0), SwCore("Core1", 1)]
    platform = Platform(cores, [HwPe("ACC0", 2, device, descriptors)])
    reader = YuvReader(str(m.frames), m.width, m.height)
    app = build_edge_app(reader, {name: name for name in descriptors},
                         block=m.block)

    constraints = MappingConstraints(
        allowed={k: [v] for k, v in m.mapping.items()},
        default_sw=[m.default_core] if m.default_core else None,
        colocate=m.colocate)
    mapping = map_actors(app, platform, constraints)

    lib = EventLib()
    lib.register_component(SwCoreComponent(cores))
    lib.register_component(load_mdc_component(
        m.mdcinfo.read_text(encoding="utf-8"), device))
    for core in cores:
        lib.configure_papify_PE(core.name, "perf_event", core.pe_id)
    lib.configure_papify_PE("ACC0", "mdc", 2)

    sw_events = m.events_sw or DEFAULT_SW_EVENTS
    hw_events = m.events_hw or DEFAULT_HW_EVENTS
    actions = {}
    for actor in app.actors:
        if actor.hw:
            actions[actor.name] = lib.configure_papify_actor(
                actor.name, ["mdc"], hw_events)
        else:
            actions[actor.name] = lib.configure_papify_actor(
                actor.name, ["perf_event"], sw_events)
    return app, platform, mapping, lib, actions


def run_manifest(manifest_path: str) -> dict:
    """Execute a run manifest end to end; returns the run summary."""
    m = load_manifest(manifest_path)
    app, platform, mapping, lib, actions = _build_session(m)
    out = Path(m.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = {"kernel": m.kernel}

    reports = []
    overhead = None
    monitored = m.monitoring in ("on", "both")
    if m.monitoring == "both":
        overhead = measure_overhead(app, platform, mapping, m.iterations,
                                    eventlib=lib, actions=actions,
                                    flush_dir=out, params=params)
        del app.outputs[:]
        lib.clear()
    for i in range(m.iterations):
        reports.append(execute_iteration(
            app, platform, mapping, monitoring=monitored,
            eventlib=lib if monitored else None,
            actions=actions if monitored else None,
            params=params, iteration=i))
        if monitored:
            lib.flush_csv(out)

    frames_path = out / "frames.yuv"
    with open(frames_path, "wb") as fh:
        for _, _, frame in app.outputs:
            fh.write(frame)

    walls = [r.wall_ns / 1e9 for r in reports]
    fps = [1.0 / w for w in walls if w > 0]
    throughput = {
        "fps_mean": statistics.fmean(fps) if fps else 0.0,
        "fps_std": statistics.pstdev(fps) if len(fps) > 1 else 0.0,
    }
    summary = {
        "iterations": m.iterations,
        "monitoring": m.monitoring,
        "kernel": m.kernel,
        "rows_written": sum(r.trace_rows for r in reports),
        "csv_dir": str(out / "papify-output") if monitored else None,
        "frames_out": str(frames_path),
        "throughput": throughput,
        "firings_per_iteration": reports[0].firings if reports else {},
    }
    if overhead is not None:
        summary["overhead"] = {
            "monitored_fps": overhead.monitored_fps,
            "monitored_std": overhead.monitored_std,
            "unmonitored_fps": overhead.unmonitored_fps,
            "unmonitored_std": overhead.unmonitored_std,
            "overhead_pct": overhead.overhead_pct,
            "table": overhead.table(),
        }

    report_path = out / "report.json"
    report_path.write_text(json.dumps({
        "summary": summary,
        "iterations": [json.loads(r.to_json()) for r in reports],
    }, indent=2), encoding="utf-8")
    summary["report"] = str(report_path)
    return summary


def summarize_traces(csv_dir: str, event: str | None = None) -> dict:
    d = Path(csv_dir)
    if not d.is_dir():
        raise ManifestError(f"not a directory: {csv_dir}")
    summary = summarize(d)
    result = {
        "text": format_summary(summary),
        "total_rows": summary.total_rows,
        "actors": [{
            "actor": a.actor,
            "count": a.count,
            "mean_ns": a.mean_ns,
            "max_ns": a.max_ns,
            "event_totals": a.event_totals,
        } for a in summary.actors],
    }
    if event is not None:
        points = timeline(d, event)
        result["timeline"] = [
            {"tstart": t, "actor": actor, "value": v} for t, actor, v in points]
        result["text"] += "\n\n" + format_timeline(points, event)
    return result
