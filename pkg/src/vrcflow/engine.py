"""Token-FIFO execution engine for dataflow graphs.

Cycle model: time advances in synchronous steps. In each step every actor
that has enough input tokens and enough space in its output FIFOs begins
a firing; tokens are consumed at the start and produced when the actor's
firing_cost has elapsed (immediately for cost 1). clock cycles = number
of steps until every graph output port has collected its expected token
count.

Determinism: actors are ticked in reverse topological order, so tokens
produced in a step become visible to downstream actors only in the next
step, giving hardware-like one-step-per-hop latency that does not depend
on declaration order. Graph input ports act as sources pushing one token
per step (an input port with no outgoing edges is drained one token per
step so size/control words still count as consumed stimulus); output
ports act as sinks draining everything available each step.

Fan-out: one output endpoint may feed several edges; each produced token
is copied into every connected FIFO.
"""
from __future__ import annotations

from collections import deque

from . import kinds as kinds_mod
from .errors import DeadlockError, SimulationError, TimeoutError_
from .model import DataflowGraph, Endpoint

DEFAULT_CYCLE_BUDGET = 2_000_000


class Counters:
    """Live monitor values for one engine run."""
    __slots__ = ("cycles", "input_tokens", "output_tokens", "firings")

    def __init__(self):
        self.cycles = 0
        self.input_tokens = 0
        self.output_tokens = 0
        self.firings: dict[str, int] = {}


def _topo_order(graph: DataflowGraph) -> list[str]:
    """Kahn topological order over actors; cycles fall back to declaration
    order for the remainder (still deterministic)."""
    succ: dict[str, set[str]] = {a.name: set() for a in graph.actors}
    indeg: dict[str, int] = {a.name: 0 for a in graph.actors}
    for e in graph.edges:
        if e.source.actor is not None and e.target.actor is not None:
            if e.target.actor not in succ[e.source.actor]:
                succ[e.source.actor].add(e.target.actor)
                indeg[e.target.actor] += 1
    order: list[str] = []
    frontier = deque(a.name for a in graph.actors if indeg[a.name] == 0)
    while frontier:
        n = frontier.popleft()
        order.append(n)
        for m in sorted(succ[n]):
            indeg[m] -= 1
            if indeg[m] == 0:
                frontier.append(m)
    if len(order) < len(graph.actors):
        order.extend(a.name for a in graph.actors if a.name not in set(order))
    return order


class Engine:
    """Compiled, runnable instance of one graph plus a stimulus.

    inputs: tokens per graph input port (missing ports get no tokens).
    expected_out: required token count per graph output port; the run
    completes when every one is met.
    selects: select value per sbox actor name (defaults to 0).
    """

    def __init__(self, graph: DataflowGraph, inputs: dict[str, list[int]],
                 expected_out: dict[str, int],
                 selects: dict[str, int] | None = None,
                 cycle_budget: int = DEFAULT_CYCLE_BUDGET):
        self.graph = graph
        self.budget = cycle_budget
        self.counters = Counters()
        self.outputs: dict[str, list[int]] = {
            p.name: [] for p in graph.output_ports}
        self.expected = dict(expected_out)
        selects = selects or {}

        # One deque per edge; index FIFOs by their endpoints.
        fifos: list[deque] = []
        caps: list[int] = []
        labels: list[str] = []
        by_target: dict[Endpoint, int] = {}
        by_source: dict[Endpoint, list[int]] = {}
        for e in graph.edges:
            idx = len(fifos)
            fifos.append(deque())
            caps.append(e.fifo_depth)
            labels.append(f"{e.source}->{e.target}")
            by_target[e.target] = idx
            by_source.setdefault(e.source, []).append(idx)
        self._fifos = fifos
        self._labels = labels

        counters = self.counters
        ticks: list = []

        # Sinks first: output ports drain everything available per step.
        for p in graph.output_ports:
            idx = by_target.get(Endpoint(None, p.name))
            if idx is None:
                continue
            ticks.append(self._make_sink(fifos[idx], self.outputs[p.name]))

        behaviors: dict[str, object] = {}
        self._count_cells: dict[str, list[int]] = {}
        for name in reversed(_topo_order(graph)):
            actor = graph.actor(name)
            beh = kinds_mod.make_behavior(actor)
            if actor.kind == "sbox" and name in selects:
                beh.set_select(selects[name])
            behaviors[name] = beh
            in_fifos = [self._fifo_or_empty(by_target.get(Endpoint(name, p)),
                                            fifos) for p in actor.in_ports]
            out_targets = []
            for p in actor.out_ports:
                idxs = by_source.get(Endpoint(name, p), [])
                out_targets.append([(fifos[i], caps[i]) for i in idxs])
            counters.firings[name] = 0
            count_cell = [0]
            self._count_cells[name] = count_cell
            ticks.append(self._compile_actor(actor, beh, in_fifos,
                                             out_targets, count_cell))
        self.behaviors = behaviors

        # Sources last: input ports push one token per step.
        for p in graph.input_ports:
            tokens = list(inputs.get(p.name, []))
            idxs = by_source.get(Endpoint(None, p.name), [])
            targets = [(fifos[i], caps[i]) for i in idxs]
            ticks.append(self._make_source(tokens, targets))
        self._ticks = ticks

    @staticmethod
    def _fifo_or_empty(idx, fifos):
        # An unconnected actor input never receives tokens; a permanently
        # empty FIFO keeps the actor from firing without special-casing.
        return fifos[idx] if idx is not None else deque()

    def _make_sink(self, fifo: deque, store: list):
        counters = self.counters

        def tick():
            if not fifo:
                return False
            n = len(fifo)
            store.extend(fifo.popleft() for _ in range(n))
            counters.output_tokens += n
            return True
        return tick

    def _make_source(self, tokens: list[int], targets):
        counters = self.counters
        pos = [0]
        n = len(tokens)

        def tick():
            i = pos[0]
            if i >= n:
                return False
            for fifo, cap in targets:
                if len(fifo) >= cap:
                    return False
            v = tokens[i]
            for fifo, _ in targets:
                fifo.append(v)
            pos[0] = i + 1
            counters.input_tokens += 1
            return True
        return tick

    def _compile_actor(self, actor, beh, in_fifos, out_targets, count_cell):
        cost = actor.firing_cost
        name = actor.name
        if isinstance(beh, kinds_mod.Simple1) and cost == 1:
            return self._fast_tick(beh, in_fifos, out_targets[0], count_cell)
        return self._general_tick(name, beh, in_fifos, out_targets,
                                  count_cell, cost)

    @staticmethod
    def _fast_tick(beh, in_fifos, targets, count_cell):
        fire1 = beh.fire1

        def tick():
            for f in in_fifos:
                if not f:
                    return False
            for f, cap in targets:
                if len(f) >= cap:
                    return False
            v = fire1(tuple(f.popleft() for f in in_fifos))
            for f, _ in targets:
                f.append(v)
            count_cell[0] += 1
            return True
        return tick

    @staticmethod
    def _general_tick(name, beh, in_fifos, out_targets, count_cell, cost):
        needs = getattr(beh, "in_needs", None) or (1,) * len(in_fifos)
        simple = isinstance(beh, kinds_mod.Simple1)
        n_in = len(in_fifos)
        pending = {"left": 0, "out": None}

        def flush(outs):
            for pi, toks in enumerate(outs):
                if not toks:
                    continue
                for fifo, _ in out_targets[pi]:
                    fifo.extend(toks)

        def tick():
            if pending["left"] > 0:
                pending["left"] -= 1
                if pending["left"] == 0:
                    flush(pending["out"])
                    pending["out"] = None
                return True
            needs_now = beh.in_needs if not simple else needs
            for k in range(n_in):
                if len(in_fifos[k]) < needs_now[k]:
                    return False
            if simple:
                counts = (1,)
            else:
                counts = beh.out_counts()
            for pi, cnt in enumerate(counts):
                if cnt == 0:
                    continue
                for fifo, cap in out_targets[pi]:
                    if cap - len(fifo) < cnt:
                        return False
            args = [[in_fifos[k].popleft() for _ in range(needs_now[k])]
                    for k in range(n_in)]
            try:
                if simple:
                    outs = [[beh.fire1(tuple(a[0] for a in args))]]
                else:
                    outs = beh.fire(args)
            except Exception as exc:
                raise SimulationError(f"actor {name!r} failed: {exc}") from exc
            count_cell[0] += 1
            if cost == 1:
                flush(outs)
            else:
                pending["left"] = cost - 1
                pending["out"] = outs
            return True
        return tick

    def _complete(self) -> bool:
        outputs = self.outputs
        for port, want in self.expected.items():
            if len(outputs.get(port, ())) < want:
                return False
        return True

    def run(self) -> int:
        """Advance until completion; returns the number of steps taken."""
        ticks = self._ticks
        counters = self.counters
        steps = 0
        while not self._complete():
            if steps >= self.budget:
                raise TimeoutError_(
                    f"cycle budget {self.budget} exceeded "
                    f"(outputs so far: { {k: len(v) for k, v in self.outputs.items()} })")
            progress = False
            for tick in ticks:
                if tick():
                    progress = True
            steps += 1
            if not progress:
                stalled = [f"{self._labels[i]} holding {len(f)}"
                           for i, f in enumerate(self._fifos) if f]
                raise DeadlockError(
                    "no actor fireable but outputs incomplete", stalled)
        counters.cycles = steps
        for name, cell in self._count_cells.items():
            counters.firings[name] = cell[0]
        return steps


def expected_output_counts(graph: DataflowGraph,
                           input_sizes: dict[str, int]) -> dict[str, int]:
    """Derive how many tokens each output port yields for a stimulus.

    All registered functional kinds are one-for-one over a whole run
    (conv included: W*H in, W*H out), so the count at any endpoint equals
    the count at the input port feeding its chain. Multi-input actors
    must see consistent counts on every input.
    """
    by_target: dict[Endpoint, Endpoint] = {}
    for e in graph.edges:
        by_target[e.target] = e.source

    memo: dict[Endpoint, int] = {}

    def count_at(ep: Endpoint, trail: tuple) -> int:
        # ep is a producing endpoint (graph input port or actor out port)
        if ep in memo:
            return memo[ep]
        if ep in trail:
            raise SimulationError(f"rate analysis hit a cycle at {ep}")
        trail = trail + (ep,)
        if ep.actor is None:
            n = input_sizes.get(ep.port, 0)
        else:
            actor = graph.actor(ep.actor)
            if actor.kind == "sbox" and len(actor.out_ports) > 1:
                # demux: only the selected branch carries tokens, but the
                # per-branch expectation equals the input count; callers
                # only query reachable branches.
                n = upstream(actor, [actor.in_ports[0]], trail)
            elif actor.kind == "sbox":
                vals = [upstream(actor, [p], trail) for p in actor.in_ports
                        if Endpoint(actor.name, p) in by_target]
                n = max(vals) if vals else 0
            else:
                n = upstream(actor, actor.in_ports, trail)
        memo[ep] = n
        return n

    def upstream(actor, ports, trail) -> int:
        vals = []
        for p in ports:
            src = by_target.get(Endpoint(actor.name, p))
            vals.append(0 if src is None else count_at(src, trail))
        distinct = {v for v in vals if v}
        if len(distinct) > 1:
            raise SimulationError(
                f"actor {actor.name!r} sees inconsistent input counts {vals}")
        return max(vals) if vals else 0

    result = {}
    for p in graph.output_ports:
        src = by_target.get(Endpoint(None, p.name))
        result[p.name] = 0 if src is None else count_at(src, ())
    return result


def simulate_graph(graph: DataflowGraph, inputs: dict[str, list[int]],
                   selects: dict[str, int] | None = None,
                   expected_out: dict[str, int] | None = None,
                   cycle_budget: int = DEFAULT_CYCLE_BUDGET):
    """Run a graph on a stimulus; returns (outputs per port, engine).

    The engine is returned so callers can inspect counters (cycles,
    token counts, per-actor firings).
    """
    if expected_out is None:
        sizes = {p: len(v) for p, v in inputs.items()}
        expected_out = expected_output_counts(graph, sizes)
    eng = Engine(graph, inputs, expected_out, selects, cycle_budget)
    eng.run()
    return eng.outputs, eng
