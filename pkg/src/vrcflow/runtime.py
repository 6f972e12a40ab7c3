"""Master runtime: maps application actors onto PEs and drives monitored
iterations through the five-step loop (schedule actors, send order, fire
actors, exchange tokens, retrieve performance information).

The schedule is static single-rate: every actor fires its repetition
count, grouped, in topological order; the simulator is sequential even
when several logical cores exist (pe_id affects mapping, trace
attribution and synthetic counters, not real parallelism). Actors talk
through named in-memory queues. A hardware-bound actor is mapped onto
its accelerator PE; before its monitored window opens, a finished
device is reset with a control clear so per-firing counter deltas stay
exact.
"""
from __future__ import annotations

import json
import statistics
import time
from collections import deque
from dataclasses import dataclass, field

from .device import CTRL_CLEAR, REG_CONTROL, VrcDevice
from .drivers import DriverDescriptor, invoke
from .edgedetect import Image, YuvReader, merge_blocks, split_blocks
from .errors import SimulationError, Unsatisfiable
from .monitoring import EventLib, PapifyAction, SwCore


@dataclass
class HwPe:
    """A hardware accelerator exposed as a processing element."""
    name: str
    pe_id: int
    device: VrcDevice
    descriptors: dict[str, DriverDescriptor]  # config name -> descriptor


@dataclass
class Platform:
    sw_cores: list[SwCore]
    hw_pes: list[HwPe] = field(default_factory=list)

    def __post_init__(self):
        ids = [c.pe_id for c in self.sw_cores] + [h.pe_id for h in self.hw_pes]
        if len(ids) != len(set(ids)):
            raise ValueError(f"pe_ids must be unique, got {ids}")

    def pe_names(self) -> dict[str, int]:
        names = {c.name: c.pe_id for c in self.sw_cores}
        names.update({h.name: h.pe_id for h in self.hw_pes})
        return names

    def core_by_id(self, pe_id: int) -> SwCore | None:
        for c in self.sw_cores:
            if c.pe_id == pe_id:
                return c
        return None

    def hw_by_id(self, pe_id: int) -> HwPe | None:
        for h in self.hw_pes:
            if h.pe_id == pe_id:
                return h
        return None


@dataclass
class AppActor:
    name: str
    repetitions: int
    fn: object                    # callable(ctx)
    hw: bool = False              # runs on an accelerator PE
    work_units: int = 0           # deterministic per-firing work estimate

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError(f"{self.name}: repetitions must be >= 1")


@dataclass
class AppGraph:
    name: str
    actors: list[AppActor]
    edges: list[tuple[str, str]]  # (producer, consumer), for ordering only
    outputs: list = field(default_factory=list)  # app-level result sink

    def actor(self, name: str) -> AppActor:
        for a in self.actors:
            if a.name == name:
                return a
        raise KeyError(name)

    def topo_order(self) -> list[AppActor]:
        names = [a.name for a in self.actors]
        indeg = {n: 0 for n in names}
        succ: dict[str, list[str]] = {n: [] for n in names}
        for s, d in self.edges:
            succ[s].append(d)
            indeg[d] += 1
        frontier = deque(n for n in names if indeg[n] == 0)
        order = []
        while frontier:
            n = frontier.popleft()
            order.append(n)
            for m in succ[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    frontier.append(m)
        if len(order) != len(names):
            raise SimulationError(f"app graph {self.name!r} has a cycle")
        return [self.actor(n) for n in order]


@dataclass
class MappingConstraints:
    allowed: dict[str, list[str]] = field(default_factory=dict)
    default_sw: list[str] | None = None     # fallback for software actors
    colocate: list[list[str]] = field(default_factory=list)


@dataclass
class Mapping:
    assignment: dict[str, int]   # actor -> pe_id
    constraints: MappingConstraints


def map_actors(app: AppGraph, platform: Platform,
               constraints: MappingConstraints | None = None) -> Mapping:
    """Deterministic first-fit (lowest pe_id) over each actor's allowed
    PEs; hardware actors only ever land on accelerator PEs."""
    constraints = constraints or MappingConstraints()
    names = platform.pe_names()
    sw_ids = sorted(c.pe_id for c in platform.sw_cores)
    hw_ids = sorted(h.pe_id for h in platform.hw_pes)

    def resolve(actor: AppActor) -> set[int]:
        wanted = constraints.allowed.get(actor.name)
        if wanted is None and not actor.hw:
            wanted = constraints.default_sw
        if wanted is None:
            return set(hw_ids if actor.hw else sw_ids)
        ids = set()
        for pe_name in wanted:
            if pe_name not in names:
                raise Unsatisfiable(
                    f"actor {actor.name!r}: constraint names unknown "
                    f"PE {pe_name!r}")
            ids.add(names[pe_name])
        ids &= set(hw_ids if actor.hw else sw_ids)
        if not ids:
            raise Unsatisfiable(
                f"actor {actor.name!r}: no {'hardware' if actor.hw else 'software'} "
                f"PE among {wanted}")
        return ids

    candidates = {a.name: resolve(a) for a in app.actors}

    group_of: dict[str, int] = {}
    for gi, group in enumerate(constraints.colocate):
        for name in group:
            if name not in candidates:
                raise Unsatisfiable(
                    f"co-location group {group} names unknown actor {name!r}")
            if name in group_of:
                raise Unsatisfiable(
                    f"actor {name!r} appears in two co-location groups")
            group_of[name] = gi

    assignment: dict[str, int] = {}
    for gi, group in enumerate(constraints.colocate):
        shared = set.intersection(*(candidates[n] for n in group))
        if not shared:
            raise Unsatisfiable(
                f"co-location group {group} has no common allowed PE")
        pe = min(shared)
        for name in group:
            assignment[name] = pe
    for a in app.actors:
        if a.name not in assignment:
            assignment[a.name] = min(candidates[a.name])
    return Mapping(assignment, constraints)


class FiringContext:
    """What an actor behavior sees while firing."""

    def __init__(self, platform: Platform, params: dict):
        self.platform = platform
        self.params = dict(params)
        self.queues: dict[str, deque] = {}
        self.state: dict = {}
        self.firing = 0
        self.iteration = 0
        self._pe_id = 0

    def push(self, label: str, item):
        self.queues.setdefault(label, deque()).append(item)

    def pop(self, label: str):
        q = self.queues.get(label)
        if not q:
            raise SimulationError(f"queue {label!r} is empty")
        return q.popleft()

    def param(self, key: str, default=None):
        return self.params.get(key, default)

    def work(self, units: int):
        core = self.platform.core_by_id(self._pe_id)
        if core is not None:
            core.add_work(units)

    def invoke_hw(self, config_name: str, inputs: dict[str, list[int]]):
        hw = self.platform.hw_by_id(self._pe_id)
        if hw is None:
            raise SimulationError(
                f"invoke_hw from an actor mapped on pe {self._pe_id}, "
                f"which is not an accelerator")
        desc = hw.descriptors.get(config_name)
        if desc is None:
            raise SimulationError(
                f"accelerator {hw.name!r} has no configuration "
                f"{config_name!r}")
        return invoke(hw.device, desc, inputs)


@dataclass
class IterationReport:
    iteration: int
    step_marks: list[tuple[str, int]]
    firings: dict[str, int]
    actor_ns: dict[str, int]
    trace_rows: int
    wall_ns: int

    def to_json(self) -> str:
        return json.dumps({
            "iteration": self.iteration,
            "steps": [{"name": n, "t_ns": t} for n, t in self.step_marks],
            "firings": self.firings,
            "actor_ns": self.actor_ns,
            "trace_rows": self.trace_rows,
            "wall_ns": self.wall_ns,
        }, indent=2)


def execute_iteration(app: AppGraph, platform: Platform, mapping: Mapping,
                      monitoring: bool = False,
                      eventlib: EventLib | None = None,
                      actions: dict[str, PapifyAction] | None = None,
                      params: dict | None = None,
                      ctx: FiringContext | None = None,
                      iteration: int = 0) -> IterationReport:
    """One application iteration through the five-step loop."""
    if monitoring and (eventlib is None or actions is None):
        raise SimulationError("monitoring requires an EventLib and actions")
    ctx = ctx or FiringContext(platform, params or {})
    ctx.params.update(params or {})
    ctx.iteration = iteration
    marks: list[tuple[str, int]] = []

    marks.append(("schedule", time.monotonic_ns()))
    schedule = app.topo_order()

    marks.append(("send_order", time.monotonic_ns()))
    plan = [(actor, mapping.assignment[actor.name]) for actor in schedule]

    marks.append(("fire", time.monotonic_ns()))
    firings: dict[str, int] = {}
    actor_ns: dict[str, int] = {}
    rows_before = len(eventlib.trace) if eventlib else 0
    for actor, pe in plan:
        action = actions.get(actor.name) if (monitoring and actions) else None
        ctx._pe_id = pe
        ctx.state = {}
        hw_pe = platform.hw_by_id(pe)
        total_ns = 0
        for k in range(actor.repetitions):
            ctx.firing = k
            # reset a finished accelerator outside the monitored window
            if hw_pe is not None and hw_pe.device.state == "done":
                hw_pe.device.reg_write(REG_CONTROL, CTRL_CLEAR)
            if action is not None:
                eventlib.event_start(action, pe)
            t0 = time.monotonic_ns()
            try:
                actor.fn(ctx)
            except Exception as exc:
                raise SimulationError(
                    f"actor {actor.name!r} firing {k} failed: {exc}") from exc
            total_ns += time.monotonic_ns() - t0
            if actor.work_units:
                ctx.work(actor.work_units)
            if action is not None:
                eventlib.event_stop(action, pe)
        firings[actor.name] = actor.repetitions
        actor_ns[actor.name] = total_ns

    marks.append(("exchange_tokens", time.monotonic_ns()))
    leftover = {k: len(q) for k, q in ctx.queues.items() if q}
    if leftover:
        raise SimulationError(
            f"iteration finished with tokens left in queues: {leftover}")

    marks.append(("retrieve", time.monotonic_ns()))
    rows = (len(eventlib.trace) - rows_before) if eventlib else 0
    wall = time.monotonic_ns() - marks[0][1]
    return IterationReport(iteration, marks, firings, actor_ns, rows, wall)


@dataclass
class OverheadReport:
    monitored_fps: float
    monitored_std: float
    unmonitored_fps: float
    unmonitored_std: float
    overhead_pct: float
    iterations: int

    def table(self) -> str:
        rows = [("monitored", self.monitored_fps, self.monitored_std,
                 f"{self.overhead_pct:+.2f}%"),
                ("unmonitored", self.unmonitored_fps, self.unmonitored_std,
                 "---")]
        lines = [f"{'Design':<14}{'FpS':>10}{'St.Dev':>10}{'Overhead':>10}"]
        for name, fps, std, ov in rows:
            lines.append(f"{name:<14}{fps:>10.2f}{std:>10.4f}{ov:>10}")
        return "\n".join(lines)


def measure_overhead(app: AppGraph, platform: Platform, mapping: Mapping,
                     iterations: int,
                     eventlib: EventLib | None = None,
                     actions: dict[str, PapifyAction] | None = None,
                     flush_dir=None,
                     params: dict | None = None,
                     warmup: int = 1) -> OverheadReport:
    """Time monitored vs unmonitored iterations on the host.

    Rates are iterations per second over the whole arm; the two arms are
    interleaved (and the GC paused) so drift hits both equally. The
    monitored arm includes flushing trace CSVs when flush_dir is given,
    since persisting rows is where the monitoring cost lives. Results are
    reported, never asserted against hardware figures. With no eventlib,
    both arms run unmonitored (a noise-floor measurement).
    """
    if iterations < 3:
        raise ValueError("need at least 3 iterations per arm")
    import gc

    def one(monitored: bool, i: int) -> float:
        t0 = time.perf_counter()
        execute_iteration(app, platform, mapping,
                          monitoring=monitored and eventlib is not None,
                          eventlib=eventlib if monitored else None,
                          actions=actions if monitored else None,
                          params=params, iteration=i)
        if monitored and eventlib is not None and flush_dir is not None:
            eventlib.flush_csv(flush_dir)
        return time.perf_counter() - t0

    mon: list[float] = []
    unmon: list[float] = []
    gc_was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        for i in range(warmup):
            one(True, i)
            one(False, i)
        for i in range(iterations):
            # alternate which arm runs first so cache/allocator warmth
            # cannot systematically favor one of them
            if i % 2 == 0:
                mon.append(one(True, i))
                unmon.append(one(False, i))
            else:
                unmon.append(one(False, i))
                mon.append(one(True, i))
    finally:
        if gc_was_enabled:
            gc.enable()
    mean_mon = iterations / sum(mon)
    mean_unmon = iterations / sum(unmon)
    # paired estimator: adjacent iterations share host drift, and the
    # median discards load spikes that hit only one arm
    overhead = statistics.median(
        (1.0 - u / m) * 100.0 for m, u in zip(mon, unmon))
    return OverheadReport(mean_mon, statistics.pstdev([1.0 / t for t in mon]),
                          mean_unmon,
                          statistics.pstdev([1.0 / t for t in unmon]),
                          overhead, iterations)


# --- the block-pipeline assessment application ---------------------------

def build_edge_app(frame_source: YuvReader, kernel_configs: dict[str, str],
                   block: int = 32) -> AppGraph:
    """Video edge-detection app: read a frame, split its luma into blocks,
    push every block through the accelerator, reassemble and display.

    kernel_configs maps the user-facing kernel parameter value (e.g.
    "roberts") to the accelerator configuration name to invoke. Eight
    actors fire once per iteration; the three block-path actors fire once
    per block (99 times for a 352x288 frame in 32x32 blocks).
    """
    w, h = frame_source.width, frame_source.height
    if w % block or h % block:
        raise ValueError(f"{w}x{h} frames do not divide into {block}x{block} blocks")
    blocks_per_frame = (w // block) * (h // block)
    output_sink: list = []

    def read_yuv(ctx):
        frame = frame_source.read_frame()
        ctx.push("yuv", frame)

    def brd_yuv(ctx):
        frame = ctx.pop("yuv")
        ctx.push("y_in", frame.luma())
        ctx.push("chroma", (frame.u, frame.v))
        ctx.push("frame_dims", (frame.width, frame.height))

    def id_setter(ctx):
        kernel = ctx.param("kernel", "roberts")
        if kernel not in kernel_configs:
            raise SimulationError(f"no accelerator configuration for "
                                  f"kernel {kernel!r}")
        ctx.push("kernel_id", kernel_configs[kernel])

    def split(ctx):
        ctx.push("slice", ctx.pop("y_in"))  # nbSlice = 1

    def edge_init(ctx):
        img = ctx.pop("slice")
        config = ctx.pop("kernel_id")
        for blk in split_blocks(img, block, block):
            ctx.push("blk_raw", blk)
        ctx.push("job", config)
        ctx.push("dims", (img.width, img.height))

    def edge_send(ctx):
        ctx.push("blk_tx", ctx.pop("blk_raw"))

    def hw_filter(ctx):
        if ctx.firing == 0:
            ctx.state["config"] = ctx.pop("job")
        blk: Image = ctx.pop("blk_tx")
        out = ctx.invoke_hw(ctx.state["config"], {
            "in_data": list(blk.data),
            "in_size": [blk.height, blk.width]})
        ctx.push("blk_rx", Image(blk.width, blk.height,
                                 bytes(out["out_data"])))

    def edge_recv(ctx):
        ctx.push("blk_done", ctx.pop("blk_rx"))

    def edge_collect(ctx):
        dims = ctx.pop("dims")
        blocks = [ctx.pop("blk_done") for _ in range(blocks_per_frame)]
        ctx.push("slice_out", merge_blocks(blocks, dims[0], dims[1]))

    def merge_slices(ctx):
        ctx.push("y_out", ctx.pop("slice_out"))  # nbSlice = 1

    def display(ctx):
        img: Image = ctx.pop("y_out")
        u, v = ctx.pop("chroma")
        fw, fh = ctx.pop("frame_dims")
        output_sink.append((fw, fh, img.data + u + v))

    app = AppGraph(name="edge_detect_app", actors=[
        AppActor("Read_YUV", 1, read_yuv, work_units=w * h * 3 // 2),
        AppActor("Brd_YUV", 1, brd_yuv, work_units=w * h),
        AppActor("IdSetter", 1, id_setter, work_units=1),
        AppActor("Split", 1, split, work_units=w * h),
        AppActor("EdgeMDC_1", 1, edge_init, work_units=w * h),
        AppActor("EdgeMDC_2", blocks_per_frame, edge_send,
                 work_units=block * block),
        AppActor("EdgeMDC_hw_filter", blocks_per_frame, hw_filter, hw=True),
        AppActor("EdgeMDC_3", blocks_per_frame, edge_recv,
                 work_units=block * block),
        AppActor("EdgeMDC_4", 1, edge_collect, work_units=w * h),
        AppActor("Merge", 1, merge_slices, work_units=w * h),
        AppActor("display", 1, display, work_units=w * h * 3 // 2),
    ], edges=[
        ("Read_YUV", "Brd_YUV"),
        ("Brd_YUV", "Split"),
        ("Brd_YUV", "display"),
        ("IdSetter", "EdgeMDC_1"),
        ("Split", "EdgeMDC_1"),
        ("EdgeMDC_1", "EdgeMDC_2"),
        ("EdgeMDC_1", "EdgeMDC_hw_filter"),
        ("EdgeMDC_1", "EdgeMDC_4"),
        ("EdgeMDC_2", "EdgeMDC_hw_filter"),
        ("EdgeMDC_hw_filter", "EdgeMDC_3"),
        ("EdgeMDC_3", "EdgeMDC_4"),
        ("EdgeMDC_4", "Merge"),
        ("Merge", "display"),
    ], outputs=output_sink)
    return app
