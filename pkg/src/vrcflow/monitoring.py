"""Unified monitoring layer over software cores and coprocessor monitors.

Components isolate counter backends behind one read interface; an
EventLib instance holds the component registry, PE bindings, actor
actions and the trace sink. The instrumentation call sequence is the
same whatever kind of PE executes the actor:

    lib.configure_papify_PE(core_name, component_name, pe_id)
    action = lib.configure_papify_actor(actor, components, events)
    lib.event_start(action, pe_id)
    ...  # the actor's work
    lib.event_stop(action, pe_id)

Events a PE's component does not provide are skipped at start/stop and
recorded as absent (empty CSV fields). The full surface is nine calls:
init (construction), register_component, configure_papify_PE,
configure_papify_actor, event_start, event_stop, flush_csv, clear and
shutdown; the middle four are the contractually primary ones.

Software cores expose two synthetic counters: PAPI_TOT_INS counts
deterministic work units reported by actor behaviors, PAPI_TOT_CYC is a
monotonic nanosecond clock. Coprocessor components read the device
monitor window through its register bus and never mutate it.
"""
from __future__ import annotations

import csv
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .drivers import check_base_address, parse_mdc_info
from .errors import (DuplicatePe, MonitorError, UnbalancedStop,
                     UnboundPe, UnknownComponent, UnknownEvent)

PAPI_TOT_INS = "PAPI_TOT_INS"
PAPI_TOT_CYC = "PAPI_TOT_CYC"

CSV_DIR_NAME = "papify-output"
CSV_FIXED_COLUMNS = ["PE", "Actor", "tstart", "tstop"]


@dataclass
class EventDef:
    index: int
    name: str
    desc: str = ""


class PapiComponent:
    """Named catalog of readable events bound to one counter backend."""

    def __init__(self, name: str, events: list[EventDef]):
        self.name = name
        self.events = list(events)
        self._by_name = {e.name: e for e in self.events}
        if len(self._by_name) != len(self.events):
            raise MonitorError(f"duplicate event names in component {name!r}")

    def has_event(self, name: str) -> bool:
        return name in self._by_name

    def read(self, pe_id: int, event_name: str) -> int:
        raise NotImplementedError


class SwCore:
    """Synthetic PMC state for one simulated software core."""

    def __init__(self, name: str, pe_id: int):
        self.name = name
        self.pe_id = pe_id
        self.work_units = 0

    def add_work(self, units: int):
        self.work_units += units


class SwCoreComponent(PapiComponent):
    """Software component: per-core work-unit counter + monotonic clock."""

    def __init__(self, cores: list[SwCore], name: str = "perf_event"):
        super().__init__(name, [EventDef(0, PAPI_TOT_INS,
                                         "Simulated work units executed"),
                                EventDef(1, PAPI_TOT_CYC,
                                         "Monotonic clock, nanoseconds")])
        self.cores = {c.pe_id: c for c in cores}

    def read(self, pe_id: int, event_name: str) -> int:
        if event_name == PAPI_TOT_CYC:
            return time.monotonic_ns()
        core = self.cores.get(pe_id)
        if core is None:
            raise UnboundPe(f"no core with pe_id {pe_id} in {self.name!r}")
        return core.work_units


class MdcComponent(PapiComponent):
    """Hardware component reading a device's monitor window over its bus."""

    def __init__(self, device, events: list[EventDef], name: str = "mdc"):
        super().__init__(name, events)
        self.device = device

    def read(self, pe_id: int, event_name: str) -> int:
        return self.device.monitor_event_value(self._by_name[event_name].index)


def load_mdc_component(xml_text: str, device,
                       name: str = "mdc") -> MdcComponent:
    """Build the hardware component from its configuration XML, checking
    the file against the device it will read."""
    base, events = parse_mdc_info(xml_text)
    check_base_address(device, base)
    return MdcComponent(device, [EventDef(i, n, d) for i, n, d in events],
                        name=name)


@dataclass(frozen=True)
class PeBinding:
    core_name: str
    component_name: str
    pe_id: int


@dataclass
class TraceRecord:
    pe_id: int
    core_name: str
    actor_name: str
    t_start: int
    t_stop: int
    values: dict[str, int | None]  # event name -> delta, None when absent


class PapifyAction:
    """Instrumentation handle for one actor; start/stop must balance per PE."""

    def __init__(self, actor_name: str, component_names: tuple[str, ...],
                 event_names: tuple[str, ...], num_configs: int,
                 config_ids: tuple[int, ...] = ()):
        self.actor_name = actor_name
        self.component_names = component_names
        self.event_names = event_names
        self.num_configs = num_configs
        self.config_ids = config_ids  # stored, deliberately inert
        self.inflight: dict[int, tuple[int, dict[str, int | None]]] = {}
        self.records: list[TraceRecord] = []

    def key(self):
        return (self.actor_name, self.component_names, self.event_names,
                self.num_configs, self.config_ids)


class EventLib:
    """Monitoring state: component registry, PE bindings, actions, traces."""

    def __init__(self):
        self.init()

    def init(self):
        self.components: dict[str, PapiComponent] = {}
        self.bindings: dict[int, PeBinding] = {}
        self.actions: dict[tuple, PapifyAction] = {}
        self.trace: list[TraceRecord] = []
        self._lock = threading.Lock()

    def register_component(self, component: PapiComponent):
        if component.name in self.components:
            raise MonitorError(f"component {component.name!r} already registered")
        self.components[component.name] = component

    def configure_papify_PE(self, core_name: str, component_name: str,
                            pe_id: int) -> PeBinding:
        if component_name not in self.components:
            raise UnknownComponent(f"no component named {component_name!r}")
        binding = PeBinding(core_name, component_name, pe_id)
        existing = self.bindings.get(pe_id)
        if existing is not None:
            if existing == binding:
                return existing  # identical reconfiguration is reused
            raise DuplicatePe(
                f"pe_id {pe_id} already bound to {existing.core_name!r}/"
                f"{existing.component_name!r}")
        self.bindings[pe_id] = binding
        return binding

    def configure_papify_actor(self, actor_name: str,
                               component_names: list[str],
                               event_names: list[str],
                               num_configs: int = 1,
                               config_ids: list[int] | None = None
                               ) -> PapifyAction:
        comps = []
        for cname in component_names:
            if cname not in self.components:
                raise UnknownComponent(f"no component named {cname!r}")
            comps.append(self.components[cname])
        for ev in event_names:
            if not any(c.has_event(ev) for c in comps):
                raise UnknownEvent(
                    f"event {ev!r} not provided by any of "
                    f"{list(component_names)}")
        action = PapifyAction(actor_name, tuple(component_names),
                              tuple(event_names), num_configs,
                              tuple(config_ids or ()))
        existing = self.actions.get(action.key())
        if existing is not None:
            return existing
        self.actions[action.key()] = action
        return action

    def _pe_component(self, pe_id: int) -> tuple[PeBinding, PapiComponent]:
        binding = self.bindings.get(pe_id)
        if binding is None:
            raise UnboundPe(f"pe_id {pe_id} is not configured")
        return binding, self.components[binding.component_name]

    def _snapshot(self, action: PapifyAction, pe_id: int,
                  comp: PapiComponent) -> dict[str, int | None]:
        # Only events the PE's component provides are read; the rest are
        # recorded as absent.
        return {ev: (comp.read(pe_id, ev) if comp.has_event(ev)
                     and comp.name in action.component_names else None)
                for ev in action.event_names}

    def event_start(self, action: PapifyAction, pe_id: int):
        _, comp = self._pe_component(pe_id)
        if pe_id in action.inflight:
            raise UnbalancedStop(
                f"event_start for {action.actor_name!r} on PE {pe_id} "
                f"while already started")
        action.inflight[pe_id] = (time.monotonic_ns(),
                                  self._snapshot(action, pe_id, comp))

    def event_stop(self, action: PapifyAction, pe_id: int) -> TraceRecord:
        binding, comp = self._pe_component(pe_id)
        if pe_id not in action.inflight:
            raise UnbalancedStop(
                f"event_stop for {action.actor_name!r} on PE {pe_id} "
                f"without a start")
        t_start, start_vals = action.inflight.pop(pe_id)
        stop_vals = self._snapshot(action, pe_id, comp)
        deltas = {ev: (None if start_vals[ev] is None
                       else stop_vals[ev] - start_vals[ev])
                  for ev in action.event_names}
        record = TraceRecord(pe_id, binding.core_name, action.actor_name,
                             t_start, time.monotonic_ns(), deltas)
        action.records.append(record)
        with self._lock:
            self.trace.append(record)
        return record

    # --- persistence -----------------------------------------------------

    def flush_csv(self, out_dir) -> list[Path]:
        """Write one CSV per actor under <out_dir>/papify-output/."""
        target = Path(out_dir) / CSV_DIR_NAME
        target.mkdir(parents=True, exist_ok=True)
        with self._lock:
            records = list(self.trace)
        by_actor: dict[str, list[TraceRecord]] = {}
        for r in records:
            by_actor.setdefault(r.actor_name, []).append(r)
        # actors with a configured action but no records still get a
        # header-only file
        for action in self.actions.values():
            by_actor.setdefault(action.actor_name, [])
        paths = []
        for actor, recs in by_actor.items():
            columns: list[str] = []
            for action in self.actions.values():
                if action.actor_name == actor:
                    columns.extend(ev for ev in action.event_names
                                   if ev not in columns)
            for r in recs:
                columns.extend(ev for ev in r.values if ev not in columns)
            path = target / f"{actor}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_FIXED_COLUMNS + columns)
                for r in recs:
                    row = [r.pe_id, r.actor_name, r.t_start, r.t_stop]
                    row.extend("" if r.values.get(ev) is None
                               else r.values[ev] for ev in columns)
                    writer.writerow(row)
            paths.append(path)
        return sorted(paths)

    def clear(self):
        """Drop collected trace records; configurations stay registered."""
        with self._lock:
            self.trace.clear()
        for action in self.actions.values():
            action.records.clear()

    def shutdown(self):
        """Tear the library down; every registration is forgotten."""
        self.init()
