"""Host-side driver layer for the coprocessor.

generate_drivers() produces one descriptor per configuration, fixing the
port order, size-register offsets and local-memory regions the invoke
transaction uses. invoke() then runs the full processor-side sequence
against a device:

    write size words -> write input data -> write config_id -> start
    -> poll done (a callback advances the simulated device between
    polls) -> read outputs

and leaves a TransactionLog on the device for monitor-exactness checks.
The device must be Idle when invoke is called: a finished device is
reset with a control-register clear first (the wrapper that monitors an
invoke issues the clear *before* its counter snapshot, so per-run deltas
stay exact).
"""
from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .device import (CTRL_START, DEFAULT_MEM_WORDS, REG_CONFIG, REG_CONTROL,
                     REG_STATUS, VrcDevice)
from .engine import expected_output_counts
from .errors import (BadState, BaseAddressMismatch, CountMismatch,
                     SchemaViolation, SizeMismatch)
from .merger import ConfigTable, MergedNetwork


@dataclass(frozen=True)
class PortBinding:
    name: str
    direction: str            # "in" | "out"
    size_reg_offset: int
    region_offset: int
    region_words: int


@dataclass(frozen=True)
class DriverDescriptor:
    config_name: str
    config_id: int
    ports: tuple[PortBinding, ...]

    def input_ports(self) -> list[PortBinding]:
        return [p for p in self.ports if p.direction == "in"]

    def output_ports(self) -> list[PortBinding]:
        return [p for p in self.ports if p.direction == "out"]


@dataclass
class TransactionLog:
    """Word counts of one invoke transaction, per port and operation."""
    entries: list[dict] = field(default_factory=list)

    def record(self, op: str, target: str, words: int):
        self.entries.append({"op": op, "target": target, "words": words})

    def input_words(self) -> int:
        return sum(e["words"] for e in self.entries
                   if e["op"] == "mem_write")

    def output_words(self) -> int:
        return sum(e["words"] for e in self.entries if e["op"] == "mem_read")

    def polls(self) -> int:
        return sum(1 for e in self.entries if e["op"] == "poll")

    def to_json_lines(self) -> str:
        return "\n".join(json.dumps(e) for e in self.entries) + "\n"


def generate_drivers(merged: MergedNetwork, table: ConfigTable,
                     mem_words: int | None = None) -> list[DriverDescriptor]:
    """One descriptor per configuration; ports follow the merged network's
    declaration order restricted to that configuration's active ports."""
    decl = [p.name for p in merged.graph.ports]
    n_ports = len(decl)
    region = (mem_words or DEFAULT_MEM_WORDS) // n_ports
    descriptors = []
    for cid in sorted(table.rows):
        active = set(table.port_map.get(cid, decl))
        bindings = []
        for i, name in enumerate(decl):
            if name not in active:
                continue
            port = merged.graph.port(name)
            bindings.append(PortBinding(
                name=name, direction=port.direction,
                size_reg_offset=3 + i,
                region_offset=i * region, region_words=region))
        descriptors.append(DriverDescriptor(
            config_name=merged.config_name(cid), config_id=cid,
            ports=tuple(bindings)))
    return descriptors


def invoke(device: VrcDevice, descriptor: DriverDescriptor,
           inputs: dict[str, list[int]],
           poll_callback=None) -> dict[str, list[int]]:
    """Run one transaction; returns the output words per output port."""
    if device.state != "idle":
        raise BadState(
            f"invoke needs an Idle device, found {device.state.capitalize()}; "
            f"write a control clear first")
    for p in descriptor.ports:
        if (p.region_words != device.region_words
                or p.region_offset != device.region_offset(p.name)
                or p.size_reg_offset != device.size_reg_offset(p.name)):
            raise SizeMismatch(
                f"descriptor port {p.name} does not match the device's "
                f"register/memory layout (was it generated for a different "
                f"memory size?)")
    in_ports = descriptor.input_ports()
    expected_names = {p.name for p in in_ports}
    if set(inputs) != expected_names:
        missing = expected_names - set(inputs)
        extra = set(inputs) - expected_names
        raise SizeMismatch(
            f"inputs must cover exactly {sorted(expected_names)}; "
            f"missing {sorted(missing)}, unexpected {sorted(extra)}")
    for p in in_ports:
        if len(inputs[p.name]) > p.region_words:
            raise SizeMismatch(
                f"{len(inputs[p.name])} words exceed port {p.name}'s "
                f"{p.region_words}-word region")
    sizes = {p.name: len(inputs[p.name]) for p in in_ports}
    out_counts = expected_output_counts(device.merged.graph, sizes)
    for p in descriptor.output_ports():
        if out_counts.get(p.name, 0) > p.region_words:
            raise SizeMismatch(
                f"expected {out_counts[p.name]} output words exceed port "
                f"{p.name}'s region")

    log = TransactionLog()
    for p in descriptor.ports:
        n = sizes[p.name] if p.direction == "in" else out_counts.get(p.name, 0)
        device.reg_write(p.size_reg_offset, n)
        log.record("reg_write", f"size_{p.name}", 1)
    for p in in_ports:
        device.mem_write(p.region_offset, inputs[p.name])
        log.record("mem_write", p.name, len(inputs[p.name]))
    device.reg_write(REG_CONFIG, descriptor.config_id)
    log.record("reg_write", "config_id", 1)
    device.reg_write(REG_CONTROL, CTRL_START)
    log.record("reg_write", "start", 1)

    advance = poll_callback or (lambda dev: dev.run_to_completion())
    while True:
        log.record("poll", "status", 1)
        if device.reg_read(REG_STATUS):
            break
        advance(device)

    outputs = {}
    for p in descriptor.output_ports():
        n = out_counts.get(p.name, 0)
        outputs[p.name] = device.mem_read(p.region_offset, n)
        log.record("mem_read", p.name, n)
    device.last_transaction = log
    return outputs


# --- monitoring-component configuration file ----------------------------

def emit_mdc_info(device: VrcDevice) -> str:
    """XML binding the device's monitor window to the monitoring layer:
    base address, number of events, and one <event> element per counter
    with its 0-based monitor-window index."""
    root = ET.Element("mdcInfo")
    ET.SubElement(root, "baseAddress").text = f"0x{device.base_address:08x}"
    catalog = device.event_catalog()
    ET.SubElement(root, "nbEvents").text = str(len(catalog))
    for index, name, desc in catalog:
        ev = ET.SubElement(root, "event")
        ET.SubElement(ev, "index").text = str(index)
        ET.SubElement(ev, "name").text = name
        ET.SubElement(ev, "desc").text = desc
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode") + "\n"


def parse_mdc_info(text: str) -> tuple[int, list[tuple[int, str, str]]]:
    """Parse an mdcInfo document; returns (base_address, catalog)."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise SchemaViolation(f"malformed mdcInfo XML: {exc}") from exc
    if root.tag != "mdcInfo":
        raise SchemaViolation(f"root must be <mdcInfo>, got <{root.tag}>")
    base_el = root.find("baseAddress")
    nb_el = root.find("nbEvents")
    if base_el is None or nb_el is None:
        raise SchemaViolation("mdcInfo needs <baseAddress> and <nbEvents>")
    known = {"baseAddress", "nbEvents", "event"}
    extra = [c.tag for c in root if c.tag not in known]
    if extra:
        raise SchemaViolation(f"unknown element(s) in mdcInfo: {extra}")
    base = int(base_el.text.strip(), 0)
    nb = int(nb_el.text.strip())
    events = []
    for ev in root.findall("event"):
        fields = {}
        for sub in ev:
            if sub.tag not in ("index", "name", "desc"):
                raise SchemaViolation(f"unknown element <{sub.tag}> in <event>")
            fields[sub.tag] = (sub.text or "").strip()
        if not {"index", "name", "desc"} <= set(fields):
            raise SchemaViolation("<event> needs index, name and desc")
        events.append((int(fields["index"]), fields["name"], fields["desc"]))
    if nb != len(events):
        raise CountMismatch(
            f"nbEvents says {nb} but {len(events)} event elements present")
    return base, events


def check_base_address(device: VrcDevice, base: int):
    if base != device.base_address:
        raise BaseAddressMismatch(
            f"mdcInfo base address {base:#x} != device base "
            f"{device.base_address:#x}")
