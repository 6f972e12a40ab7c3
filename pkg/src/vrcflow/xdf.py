"""XDF-subset XML reader/writer for dataflow graphs.

Schema (UTF-8, all attribute values are strings, integers where noted):

    <XDF name="graph-name">
      <Port kind="Input|Output" name="p" width="8|16|32"/>
      <Instance id="actor-name" kind="registered-kind" [cost="1"]>
        <Param name="k" value="int"/>
      </Instance>
      <Connection src="actor|''" src-port="p" dst="actor|''" dst-port="p"
                  [depth="int"]/>
    </XDF>

An empty src/dst attribute denotes a graph port endpoint. Unknown
elements or attributes are rejected. Parsing validates the result: a
document that parses but breaks model invariants raises SemanticError
carrying the diagnostics.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET

from .errors import SchemaViolation, SemanticError, XmlSyntaxError
from .model import (DEFAULT_FIFO_DEPTH, Actor, DataflowGraph, Edge, Endpoint,
                    PortDecl, validate)

_PORT_ATTRS = {"kind", "name", "width"}
_INSTANCE_ATTRS = {"id", "kind", "cost"}
_PARAM_ATTRS = {"name", "value"}
_CONNECTION_ATTRS = {"src", "src-port", "dst", "dst-port", "depth"}


def _check_attrs(elem: ET.Element, allowed: set[str], required: set[str]):
    extra = set(elem.attrib) - allowed
    if extra:
        raise SchemaViolation(
            f"<{elem.tag}> has unknown attribute(s): {', '.join(sorted(extra))}")
    missing = required - set(elem.attrib)
    if missing:
        raise SchemaViolation(
            f"<{elem.tag}> missing attribute(s): {', '.join(sorted(missing))}")


def _int_attr(elem: ET.Element, name: str, default: int | None = None) -> int:
    raw = elem.attrib.get(name)
    if raw is None:
        return default
    try:
        return int(raw, 0)
    except ValueError:
        raise SchemaViolation(f"<{elem.tag} {name}={raw!r}> is not an integer")


def parse_xdf(text: str) -> DataflowGraph:
    """Parse and validate an XDF-subset document."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise XmlSyntaxError(f"malformed XML: {exc}") from exc
    if root.tag != "XDF":
        raise SchemaViolation(f"root element must be <XDF>, got <{root.tag}>")
    _check_attrs(root, {"name"}, {"name"})
    graph = DataflowGraph(name=root.attrib["name"])

    for child in root:
        if child.tag == "Port":
            _check_attrs(child, _PORT_ATTRS, {"kind", "name"})
            kind = child.attrib["kind"]
            if kind not in ("Input", "Output"):
                raise SchemaViolation(f"Port kind must be Input|Output, got {kind!r}")
            if len(child):
                raise SchemaViolation("<Port> takes no children")
            graph.ports.append(PortDecl(
                name=child.attrib["name"],
                direction="in" if kind == "Input" else "out",
                token_width=_int_attr(child, "width", 32)))
        elif child.tag == "Instance":
            _check_attrs(child, _INSTANCE_ATTRS, {"id", "kind"})
            params: dict[str, int] = {}
            for sub in child:
                if sub.tag != "Param":
                    raise SchemaViolation(
                        f"<Instance> allows only <Param> children, got <{sub.tag}>")
                _check_attrs(sub, _PARAM_ATTRS, _PARAM_ATTRS)
                params[sub.attrib["name"]] = _int_attr(sub, "value")
            actor = Actor(name=child.attrib["id"], kind=child.attrib["kind"],
                          params=params, firing_cost=_int_attr(child, "cost", 1))
            _derive_ports(actor)
            graph.actors.append(actor)
        elif child.tag == "Connection":
            _check_attrs(child, _CONNECTION_ATTRS,
                         {"src", "src-port", "dst", "dst-port"})
            graph.edges.append(Edge(
                source=Endpoint(child.attrib["src"] or None,
                                child.attrib["src-port"]),
                target=Endpoint(child.attrib["dst"] or None,
                                child.attrib["dst-port"]),
                fifo_depth=_int_attr(child, "depth", DEFAULT_FIFO_DEPTH)))
        else:
            raise SchemaViolation(f"unknown element <{child.tag}>")

    diags = validate(graph)
    if diags:
        raise SemanticError(
            "; ".join(str(d) for d in diags[:5])
            + ("" if len(diags) <= 5 else f" (+{len(diags) - 5} more)"),
            diagnostics=diags)
    return graph


def _derive_ports(actor: Actor):
    """Port lists are implied by the kind (and params); the document does
    not repeat them."""
    kind = actor.kind
    if kind == "conv":
        kh = actor.params.get("kh", 0)
        kw = actor.params.get("kw", 0)
        actor.in_ports = [f"t_{i}_{j}" for i in range(kh) for j in range(kw)]
        actor.out_ports = ["out"]
    elif kind in ("abs_sum",):
        actor.in_ports = ["h", "v"]
        actor.out_ports = ["out"]
    elif kind == "sum2":
        actor.in_ports = ["a", "b"]
        actor.out_ports = ["out"]
    elif kind == "sbox":
        fan_in = actor.params.get("fan_in", 1)
        fan_out = actor.params.get("fan_out", 1)
        if fan_in > 1:
            actor.in_ports = [f"in_{i}" for i in range(fan_in)]
            actor.out_ports = ["out"]
        else:
            actor.in_ports = ["in"]
            actor.out_ports = [f"out_{i}" for i in range(fan_out)]
    else:
        actor.in_ports = ["in"]
        actor.out_ports = ["out"]


def serialize_xdf(graph: DataflowGraph) -> str:
    """Deterministic serialization; parse(serialize(parse(x))) == parse(x)."""
    root = ET.Element("XDF", {"name": graph.name})
    for p in graph.ports:
        root.append(ET.Element("Port", {
            "kind": "Input" if p.direction == "in" else "Output",
            "name": p.name, "width": str(p.token_width)}))
    for a in graph.actors:
        inst = ET.Element("Instance", {"id": a.name, "kind": a.kind})
        if a.firing_cost != 1:
            inst.set("cost", str(a.firing_cost))
        params = dict(a.params)
        if a.kind == "sbox":
            # fan-in/out params let the reader rebuild the port lists
            params.setdefault("fan_in", len(a.in_ports))
            params.setdefault("fan_out", len(a.out_ports))
        for k in params:
            inst.append(ET.Element("Param", {"name": k, "value": str(params[k])}))
        root.append(inst)
    for e in graph.edges:
        attrs = {"src": e.source.actor or "", "src-port": e.source.port,
                 "dst": e.target.actor or "", "dst-port": e.target.port}
        if e.fifo_depth != DEFAULT_FIFO_DEPTH:
            attrs["depth"] = str(e.fifo_depth)
        root.append(ET.Element("Connection", attrs))
    ET.indent(root, space="  ")
    return ET.tostring(root, encoding="unicode", xml_declaration=False) + "\n"
