"""Dataflow graph data model and structural validation.

A graph is a set of actors exchanging integer tokens over FIFO edges,
plus declared I/O ports. Endpoints are (owner, port) pairs where owner
is an actor name or None for a graph port. The model is a plain value
type: parsing, merging and simulation all build on it.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

TOKEN_WIDTHS = (8, 16, 32)
DEFAULT_FIFO_DEPTH = 64


@dataclass(frozen=True)
class PortDecl:
    name: str
    direction: str  # "in" | "out"
    token_width: int = 32


@dataclass(frozen=True)
class Endpoint:
    """One side of an edge: an actor port, or a graph port when actor is None."""
    actor: str | None
    port: str

    def __str__(self):
        return self.port if self.actor is None else f"{self.actor}.{self.port}"


@dataclass
class Actor:
    name: str
    kind: str
    params: dict[str, int] = field(default_factory=dict)
    in_ports: list[str] = field(default_factory=list)
    out_ports: list[str] = field(default_factory=list)
    firing_cost: int = 1

    def signature(self) -> tuple:
        """Identity tuple used by the merger: kind, params and port shape."""
        return (self.kind, tuple(sorted(self.params.items())),
                tuple(self.in_ports), tuple(self.out_ports), self.firing_cost)


@dataclass
class Edge:
    source: Endpoint
    target: Endpoint
    fifo_depth: int = DEFAULT_FIFO_DEPTH


@dataclass
class DataflowGraph:
    name: str
    actors: list[Actor] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    ports: list[PortDecl] = field(default_factory=list)

    @property
    def input_ports(self) -> list[PortDecl]:
        return [p for p in self.ports if p.direction == "in"]

    @property
    def output_ports(self) -> list[PortDecl]:
        return [p for p in self.ports if p.direction == "out"]

    def actor(self, name: str) -> Actor:
        for a in self.actors:
            if a.name == name:
                return a
        raise KeyError(name)

    def actor_names(self) -> set[str]:
        return {a.name for a in self.actors}

    def port(self, name: str) -> PortDecl:
        for p in self.ports:
            if p.name == name:
                return p
        raise KeyError(name)

    def kind_multiset(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for a in self.actors:
            counts[a.kind] = counts.get(a.kind, 0) + 1
        return counts

    def copy(self) -> "DataflowGraph":
        return DataflowGraph(
            name=self.name,
            actors=[replace(a, params=dict(a.params), in_ports=list(a.in_ports),
                            out_ports=list(a.out_ports)) for a in self.actors],
            edges=[replace(e) for e in self.edges],
            ports=list(self.ports),
        )


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    location: str
    message: str

    def __str__(self):
        return f"[{self.rule}] {self.location}: {self.message}"


def _endpoint_exists(graph: DataflowGraph, ep: Endpoint, need_dir: str) -> bool:
    """need_dir is the direction the endpoint must provide: 'out' for an
    edge source, 'in' for an edge target."""
    if ep.actor is None:
        try:
            decl = graph.port(ep.port)
        except KeyError:
            return False
        # A graph *input* port feeds edges (acts as a source) and vice versa.
        return decl.direction == ("in" if need_dir == "out" else "out")
    try:
        actor = graph.actor(ep.actor)
    except KeyError:
        return False
    ports = actor.out_ports if need_dir == "out" else actor.in_ports
    return ep.port in ports


def validate(graph: DataflowGraph, kinds=None) -> list[Diagnostic]:
    """Check every structural invariant; empty list means the graph is valid.

    `kinds` is the functional-class registry (defaults to the built-in one);
    it checks kind existence, parameter arity and port signatures.
    """
    from . import kinds as kinds_mod
    registry = kinds_mod.REGISTRY if kinds is None else kinds
    diags: list[Diagnostic] = []

    seen_actors: set[str] = set()
    for a in graph.actors:
        if a.name in seen_actors:
            diags.append(Diagnostic("DuplicateActorName", a.name,
                                    f"actor name {a.name!r} declared twice"))
        seen_actors.add(a.name)
        if a.firing_cost < 1:
            diags.append(Diagnostic("BadFiringCost", a.name,
                                    f"firing_cost must be >= 1, got {a.firing_cost}"))
        if a.kind not in registry:
            diags.append(Diagnostic("UnknownActorKind", a.name,
                                    f"kind {a.kind!r} is not registered"))
        else:
            problem = registry[a.kind].check(a)
            if problem:
                diags.append(Diagnostic("BadParams", a.name, problem))

    seen_ports: set[str] = set()
    for p in graph.ports:
        if p.name in seen_ports:
            diags.append(Diagnostic("DuplicatePortName", p.name,
                                    f"port name {p.name!r} declared twice"))
        seen_ports.add(p.name)
        if p.token_width not in TOKEN_WIDTHS:
            diags.append(Diagnostic("BadTokenWidth", p.name,
                                    f"token_width must be one of {TOKEN_WIDTHS}"))

    incoming: dict[Endpoint, int] = {}
    for e in graph.edges:
        if e.fifo_depth < 1:
            diags.append(Diagnostic("BadFifoDepth", str(e.source),
                                    f"fifo_depth must be >= 1, got {e.fifo_depth}"))
        if not _endpoint_exists(graph, e.source, "out"):
            diags.append(Diagnostic("DanglingEndpoint", str(e.source),
                                    "edge source references no existing output"))
        if not _endpoint_exists(graph, e.target, "in"):
            diags.append(Diagnostic("DanglingEndpoint", str(e.target),
                                    "edge target references no existing input"))
        incoming[e.target] = incoming.get(e.target, 0) + 1

    for ep, n in incoming.items():
        if n > 1:
            diags.append(Diagnostic("MultipleWriters", str(ep),
                                    f"input endpoint has {n} incoming edges"))

    diags.extend(_check_connectivity(graph))
    return diags


def _check_connectivity(graph: DataflowGraph) -> list[Diagnostic]:
    """Every actor must sit on the undirected component touching the ports.

    A portless or actorless graph has no connectivity at all and is flagged.
    Ports themselves may be unconnected (size/control ports exist purely for
    the driver contract).
    """
    if not graph.actors:
        return [Diagnostic("NotConnected", graph.name,
                           "graph has no actors (no connectivity)")]
    adj: dict[str, set[str]] = {a.name: set() for a in graph.actors}
    port_node = "\x00ports"  # all graph ports collapse to one node
    adj[port_node] = set()
    for e in graph.edges:
        u = e.source.actor if e.source.actor is not None else port_node
        v = e.target.actor if e.target.actor is not None else port_node
        if u in adj and v in adj:
            adj[u].add(v)
            adj[v].add(u)
    reached = {port_node}
    stack = [port_node]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in reached:
                reached.add(nxt)
                stack.append(nxt)
    orphans = sorted(set(adj) - reached - {port_node})
    return [Diagnostic("NotConnected", name,
                       "actor is not connected to any graph port")
            for name in orphans]
