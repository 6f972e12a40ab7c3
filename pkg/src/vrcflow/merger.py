"""Datapath merging: fold N dataflow graphs into one multi-functional
network with switching elements (SBoxes) and a configuration table.

Actor identity is deliberately conservative: two actors are the same
functional unit iff their names are equal AND kind, params, port
signature and firing cost all match. Equal names with anything else
different is an IdentityConflict (the graphs disagree about what that
unit is); different names never share, even if structurally identical.

SBoxes are inserted only where routing actually differs between
configurations: a k:1 mux where an input endpoint has different
producers per configuration, a 1:k demux where an output endpoint feeds
different consumers per configuration (inactive branches receive no
tokens). Per-configuration routing is recorded in the ConfigTable;
SBoxes idle in a configuration get the documented don't-care value 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (EmptyInput, IdentityConflict, MergeError,
                     UnknownConfig, UnsupportedFanout)
from .model import (Actor, DataflowGraph, Edge, Endpoint, PortDecl, validate)


@dataclass
class ConfigTable:
    """Per-configuration SBox selects and active I/O ports."""
    rows: dict[int, dict[str, int]] = field(default_factory=dict)
    port_map: dict[int, list[str]] = field(default_factory=dict)


@dataclass
class MergedNetwork:
    graph: DataflowGraph
    source_ids: dict[str, int]          # input graph name -> config id
    sbox_list: list[str]
    origins: dict[str, set[int]] = field(default_factory=dict)

    def config_name(self, config_id: int) -> str:
        for name, cid in self.source_ids.items():
            if cid == config_id:
                return name
        raise UnknownConfig(f"no configuration with id {config_id}")

    def functional_actors(self) -> list[Actor]:
        return [a for a in self.graph.actors if a.kind != "sbox"]


def select_config(table: ConfigTable, config_id: int) -> dict[str, int]:
    """Full SBox select row for one configuration."""
    if config_id not in table.rows:
        raise UnknownConfig(f"unknown configuration id {config_id}")
    return dict(table.rows[config_id])


@dataclass
class _RawEdge:
    source: Endpoint
    target: Endpoint
    depth: int
    configs: set[int]


def merge(graphs: list[DataflowGraph]) -> tuple[MergedNetwork, ConfigTable]:
    if not graphs:
        raise EmptyInput("merge needs at least one input graph")
    names = [g.name for g in graphs]
    if len(set(names)) != len(names):
        raise MergeError(f"input graph names must be unique, got {names}")
    for g in graphs:
        diags = validate(g)
        if diags:
            raise MergeError(
                f"input graph {g.name!r} is invalid: "
                + "; ".join(str(d) for d in diags[:3]))

    source_ids = {g.name: i + 1 for i, g in enumerate(graphs)}

    # --- fold actors, ports and raw edges under the identity relation ---
    actors: dict[str, Actor] = {}
    origins: dict[str, set[int]] = {}
    actor_order: list[str] = []
    ports: dict[str, PortDecl] = {}
    port_order: list[str] = []
    raw: dict[tuple[Endpoint, Endpoint], _RawEdge] = {}
    raw_order: list[tuple[Endpoint, Endpoint]] = []

    for g in graphs:
        cid = source_ids[g.name]
        for a in g.actors:
            if a.name in actors:
                if actors[a.name].signature() != a.signature():
                    raise IdentityConflict(
                        f"actor {a.name!r} exists in several graphs with "
                        f"different kind/params/ports")
                origins[a.name].add(cid)
            else:
                actors[a.name] = Actor(a.name, a.kind, dict(a.params),
                                       list(a.in_ports), list(a.out_ports),
                                       a.firing_cost)
                origins[a.name] = {cid}
                actor_order.append(a.name)
        for p in g.ports:
            if p.name in ports:
                if ports[p.name] != p:
                    raise IdentityConflict(
                        f"port {p.name!r} declared with different "
                        f"direction/width across graphs")
            else:
                ports[p.name] = p
                port_order.append(p.name)
        for e in g.edges:
            key = (e.source, e.target)
            if key in raw:
                raw[key].configs.add(cid)
                raw[key].depth = max(raw[key].depth, e.fifo_depth)
            else:
                raw[key] = _RawEdge(e.source, e.target, e.fifo_depth, {cid})
                raw_order.append(key)

    edges = [raw[k] for k in raw_order]
    all_ids = sorted(source_ids.values())
    sbox_rows: dict[str, dict[int, int]] = {}  # sbox -> config -> select
    sbox_actors: list[Actor] = []

    def new_sbox(n_in: int, n_out: int) -> Actor:
        name = f"SB_{len(sbox_actors)}"
        if n_in > 1:
            a = Actor(name, "sbox",
                      {"select": 0, "fan_in": n_in, "fan_out": 1},
                      [f"in_{i}" for i in range(n_in)], ["out"])
        else:
            a = Actor(name, "sbox",
                      {"select": 0, "fan_in": 1, "fan_out": n_out},
                      ["in"], [f"out_{i}" for i in range(n_out)])
        sbox_actors.append(a)
        sbox_rows[name] = {}
        return a

    # --- mux pass: input endpoints with several producers ---------------
    # Enumerate targets deterministically: graph output ports first, then
    # actors in fold order with their declared input ports.
    target_order: list[Endpoint] = [Endpoint(None, n) for n in port_order
                                    if ports[n].direction == "out"]
    for name in actor_order:
        target_order.extend(Endpoint(name, p) for p in actors[name].in_ports)

    by_target: dict[Endpoint, list[_RawEdge]] = {}
    for e in edges:
        by_target.setdefault(e.target, []).append(e)

    for tgt in target_order:
        incoming = by_target.get(tgt, [])
        if len(incoming) <= 1:
            continue
        seen: set[int] = set()
        for e in incoming:
            if e.configs & seen:
                raise MergeError(
                    f"input endpoint {tgt} has two producers in one "
                    f"configuration")
            seen |= e.configs
        branches = sorted(incoming, key=lambda e: min(e.configs))
        sb = new_sbox(len(branches), 1)
        for i, e in enumerate(branches):
            e.target = Endpoint(sb.name, f"in_{i}")
            for cid in e.configs:
                sbox_rows[sb.name][cid] = i
        edges.append(_RawEdge(Endpoint(sb.name, "out"), tgt,
                              max(b.depth for b in branches),
                              set().union(*(b.configs for b in branches))))

    # --- demux pass: output endpoints feeding different consumers -------
    source_order: list[Endpoint] = [Endpoint(None, n) for n in port_order
                                    if ports[n].direction == "in"]
    for name in actor_order:
        source_order.extend(Endpoint(name, p) for p in actors[name].out_ports)
    for sb in list(sbox_actors):  # mux outputs may still need a demux
        source_order.extend(Endpoint(sb.name, p) for p in sb.out_ports)

    by_source: dict[Endpoint, list[_RawEdge]] = {}
    for e in edges:
        by_source.setdefault(e.source, []).append(e)

    for src in source_order:
        outgoing = by_source.get(src, [])
        groups: dict[frozenset, list[_RawEdge]] = {}
        for e in outgoing:
            groups.setdefault(frozenset(e.configs), []).append(e)
        if len(groups) <= 1:
            continue
        keys = sorted(groups, key=min)
        for i, k1 in enumerate(keys):
            for k2 in keys[i + 1:]:
                if k1 & k2:
                    raise UnsupportedFanout(
                        f"output endpoint {src} feeds consumer sets that "
                        f"overlap across configurations ({sorted(k1)} vs "
                        f"{sorted(k2)}); this cannot be routed without "
                        f"dropping tokens")
        sb = new_sbox(1, len(keys))
        for i, key in enumerate(keys):
            for e in groups[key]:
                e.source = Endpoint(sb.name, f"out_{i}")
            for cid in key:
                sbox_rows[sb.name][cid] = i
        edges.append(_RawEdge(src, Endpoint(sb.name, "in"),
                              max(e.depth for e in outgoing),
                              set().union(*keys)))

    # --- assemble -------------------------------------------------------
    merged_graph = DataflowGraph(
        name="merged_" + "_".join(names),
        actors=[actors[n] for n in actor_order] + sbox_actors,
        edges=[Edge(e.source, e.target, e.depth) for e in edges],
        ports=[ports[n] for n in port_order])
    diags = validate(merged_graph)
    if diags:  # internal consistency check; should be unreachable
        raise MergeError("merged graph failed validation: "
                         + "; ".join(str(d) for d in diags))

    table = ConfigTable()
    for g in graphs:
        cid = source_ids[g.name]
        table.rows[cid] = {sb.name: sbox_rows[sb.name].get(cid, 0)
                           for sb in sbox_actors}
        table.port_map[cid] = [p.name for p in g.ports]
    merged = MergedNetwork(merged_graph, source_ids,
                           [sb.name for sb in sbox_actors], origins)
    return merged, table


# --- per-configuration extraction ---------------------------------------

def extract_config_subgraph(merged: MergedNetwork, table: ConfigTable,
                            config_id: int) -> DataflowGraph:
    """Reconstruct the plain graph a configuration executes.

    Works from the merged graph and the select row alone (the same
    information the emitted artifacts carry): SBoxes are contracted along
    their selected branches, then the subgraph forward-reachable from the
    graph input ports is taken. Unconnected ports are treated as active
    in every configuration. FIFO depths are not restored (shared edges
    keep the merged maximum).
    """
    if config_id not in table.rows:
        raise UnknownConfig(f"unknown configuration id {config_id}")
    selects = table.rows[config_id]
    g = merged.graph
    sboxes = {a.name: a for a in g.actors if a.kind == "sbox"}

    in_edge: dict[Endpoint, Edge] = {e.target: e for e in g.edges}

    def resolve(src: Endpoint) -> Endpoint | None:
        """Trace through sboxes back to the true producing endpoint,
        returning None when an unselected branch is crossed."""
        while src.actor in sboxes:
            sb = sboxes[src.actor]
            sel = selects.get(sb.name, 0)
            if len(sb.out_ports) > 1:  # demux
                if src.port != f"out_{sel}":
                    return None
                feeder = in_edge.get(Endpoint(sb.name, "in"))
            else:  # mux
                feeder = in_edge.get(Endpoint(sb.name, f"in_{sel}"))
            if feeder is None:
                return None
            src = feeder.source
        return src

    live: list[tuple[Endpoint, Endpoint, int]] = []
    for e in g.edges:
        if e.target.actor in sboxes:
            continue
        src = resolve(e.source)
        if src is not None:
            live.append((src, e.target, e.fifo_depth))

    # forward reachability from input ports over contracted edges
    out_of: dict[str | None, list[tuple[Endpoint, Endpoint, int]]] = {}
    for s, t, d in live:
        out_of.setdefault(s.actor, []).append((s, t, d))
    reached_actors: set[str] = set()
    frontier: list[str | None] = [None]
    seen_nodes: set[str | None] = {None}
    kept: list[tuple[Endpoint, Endpoint, int]] = []
    while frontier:
        node = frontier.pop()
        for s, t, d in out_of.get(node, []):
            kept.append((s, t, d))
            if t.actor is not None:
                reached_actors.add(t.actor)
                if t.actor not in seen_nodes:
                    seen_nodes.add(t.actor)
                    frontier.append(t.actor)

    connected_ports: set[str] = set()
    for e in g.edges:
        if e.source.actor is None:
            connected_ports.add(e.source.port)
        if e.target.actor is None:
            connected_ports.add(e.target.port)
    active_ports: list[PortDecl] = []
    for p in g.ports:
        if p.name not in connected_ports:
            active_ports.append(p)  # unconnected: active everywhere
            continue
        if p.direction == "in":
            if any(s.actor is None and s.port == p.name for s, _, _ in kept):
                active_ports.append(p)
        else:
            if any(t.actor is None and t.port == p.name for _, t, _ in kept):
                active_ports.append(p)

    sub = DataflowGraph(
        name=merged.config_name(config_id),
        actors=[Actor(a.name, a.kind, dict(a.params), list(a.in_ports),
                      list(a.out_ports), a.firing_cost)
                for a in g.actors if a.name in reached_actors],
        edges=[Edge(s, t, d) for s, t, d in kept],
        ports=active_ports)
    return sub


def active_port_map(merged: MergedNetwork, table: ConfigTable) -> dict[int, list[str]]:
    """Recompute the per-configuration port lists from graph + selects,
    in merged declaration order (used when loading emitted artifacts)."""
    result = {}
    decl = [p.name for p in merged.graph.ports]
    for cid in table.rows:
        sub = extract_config_subgraph(merged, table, cid)
        names = {p.name for p in sub.ports}
        result[cid] = [n for n in decl if n in names]
    return result


# --- C_TAB sidecar ------------------------------------------------------

def format_ctab(merged: MergedNetwork, table: ConfigTable) -> str:
    """One line per configuration: ``config <id> <name>: SB_x=v ...``"""
    lines = []
    for cid in sorted(table.rows):
        pairs = " ".join(f"{sb}={table.rows[cid][sb]}"
                         for sb in merged.sbox_list)
        lines.append(f"config {cid} {merged.config_name(cid)}:"
                     + (" " + pairs if pairs else ""))
    return "\n".join(lines) + "\n"


def parse_ctab(text: str, graph: DataflowGraph) -> tuple[MergedNetwork, ConfigTable]:
    """Rebuild MergedNetwork + ConfigTable from a merged graph and its
    C_TAB sidecar."""
    sbox_list = [a.name for a in graph.actors if a.kind == "sbox"]
    table = ConfigTable()
    source_ids: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(":")
        parts = head.split()
        if len(parts) != 3 or parts[0] != "config":
            raise MergeError(f"ctab line {lineno}: expected "
                             f"'config <id> <name>: ...', got {line!r}")
        cid = int(parts[1])
        source_ids[parts[2]] = cid
        row = {sb: 0 for sb in sbox_list}
        for pair in rest.split():
            sb, _, val = pair.partition("=")
            if sb not in row:
                raise MergeError(f"ctab line {lineno}: unknown sbox {sb!r}")
            row[sb] = int(val)
        table.rows[cid] = row
    if not table.rows:
        raise MergeError("ctab file holds no configurations")
    merged = MergedNetwork(graph, source_ids, sbox_list)
    table.port_map = active_port_map(merged, table)
    # origins are not encoded in the artifacts; recompute by reachability
    for cid in table.rows:
        sub = extract_config_subgraph(merged, table, cid)
        for a in sub.actors:
            merged.origins.setdefault(a.name, set()).add(cid)
    return merged, table
