from vrcflow import Actor, DataflowGraph, Edge, Endpoint, PortDecl, validate
from conftest import chain_graph, two_chain_pair


def rules(diags):
    return [d.rule for d in diags]


def test_valid_chain_has_no_diagnostics():
    g = chain_graph("g", [("a", "scale", {"factor": 2})])
    assert validate(g) == []


def test_valid_kernel_graphs_are_clean(edge_networks_16):
    sg, rg, merged, _ = edge_networks_16
    assert validate(sg) == []
    assert validate(rg) == []
    assert validate(merged.graph) == []


def test_duplicate_actor_name():
    g = chain_graph("g", [("conv", "scale", {"factor": 1})])
    g.actors.append(Actor("conv", "offset", {"addend": 0}, ["in"], ["out"]))
    assert "DuplicateActorName" in rules(validate(g))


def test_dangling_endpoint():
    g = chain_graph("g", [("a", "scale", {"factor": 2})])
    g.edges.append(Edge(Endpoint("a", "out"), Endpoint("ghost", "in")))
    assert "DanglingEndpoint" in rules(validate(g))


def test_wrong_port_direction_is_dangling():
    g = chain_graph("g", [("a", "scale", {"factor": 2})])
    # feeding an input port *from* the graph output port
    g.edges.append(Edge(Endpoint(None, "out"), Endpoint("a", "in")))
    diags = rules(validate(g))
    assert "DanglingEndpoint" in diags or "MultipleWriters" in diags


def test_multiple_writers_flagged():
    g = chain_graph("g", [("a", "scale", {"factor": 2}),
                          ("b", "offset", {"addend": 1})])
    g.edges.append(Edge(Endpoint(None, "in"), Endpoint("b", "in")))
    assert "MultipleWriters" in rules(validate(g))


def test_orphan_actor_flagged():
    g = chain_graph("g", [("a", "scale", {"factor": 2})])
    g.actors.append(Actor("island", "offset", {"addend": 1}, ["in"], ["out"]))
    assert "NotConnected" in rules(validate(g))


def test_empty_graph_not_connected():
    g = DataflowGraph("empty")
    assert "NotConnected" in rules(validate(g))


def test_unknown_kind_and_bad_params():
    g = chain_graph("g", [("a", "mystery", {})])
    assert "UnknownActorKind" in rules(validate(g))
    g2 = chain_graph("g", [("a", "scale", {})])  # missing factor
    assert "BadParams" in rules(validate(g2))


def test_bad_firing_cost_and_depth_and_width():
    g = chain_graph("g", [("a", "scale", {"factor": 2})])
    g.actors[0].firing_cost = 0
    g.edges[0].fifo_depth = 0
    g.ports[0] = PortDecl("in", "in", 12)
    found = rules(validate(g))
    assert {"BadFiringCost", "BadFifoDepth", "BadTokenWidth"} <= set(found)


def test_diagnostics_carry_location_and_rule():
    g = chain_graph("g", [("a", "mystery", {})])
    diag = validate(g)[0]
    assert diag.rule and diag.location == "a" and diag.message


def test_two_chain_pair_is_valid():
    g1, g2 = two_chain_pair()
    assert validate(g1) == [] and validate(g2) == []
