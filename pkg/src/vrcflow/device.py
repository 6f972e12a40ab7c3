"""Simulated memory-mapped coprocessor hosting a merged network.

Register map (word offsets from the base address):

    0                 control (write-only): bit0 start, bit1 clear
    1                 status (read-only): 1 while the device is Done
    2                 config_id
    3 .. 3+P-1        per-port size registers, port declaration order
    3+P .. 3+P+2E-1   monitor window (read-only), two words per event:
                      event e low word at 3+P+2e, high word at 3+P+2e+1

Events 0..2 are always present: MDC_CLOCK_CYCLE, MDC_INPUT_TOKENS,
MDC_OUTPUT_TOKENS. When the device is built with per-FU monitors, one
MDC_FU_FIRINGS_<actor> event per functional (non-SBox) actor follows in
graph order.

Local memory is split into P equal regions, one per port in declaration
order; the host exchanges stimulus and results through them. State
machine: Idle -> Running (start with a valid config id) -> Done (run
completes) -> Idle (clear). Clear also zeroes every monitor counter and
is accepted while Idle; it fails while Running, as does any memory
access. Counters are never reset by start, so back-to-back runs without
a clear accumulate.
"""
from __future__ import annotations

from .engine import DEFAULT_CYCLE_BUDGET, Engine
from .errors import BadState, OutOfRange, ReadOnlyRegister
from .merger import ConfigTable, MergedNetwork

REG_CONTROL = 0
REG_STATUS = 1
REG_CONFIG = 2
REG_PORT_BASE = 3

CTRL_START = 0x1
CTRL_CLEAR = 0x2

DEFAULT_BASE_ADDRESS = 0x43C00000
DEFAULT_MEM_WORDS = 64 * 1024

_WORD_MASK = 0xFFFFFFFF

EVENT_CLOCK = "MDC_CLOCK_CYCLE"
EVENT_IN_TOKENS = "MDC_INPUT_TOKENS"
EVENT_OUT_TOKENS = "MDC_OUTPUT_TOKENS"


class MonitorBank:
    """Accelerator-level counters plus optional per-FU firing counters."""

    def __init__(self, fu_names: list[str] | None):
        self.clock_cycles = 0
        self.input_tokens = 0
        self.output_tokens = 0
        self.fu_firings: dict[str, int] | None = (
            {n: 0 for n in fu_names} if fu_names is not None else None)

    def clear(self):
        self.clock_cycles = 0
        self.input_tokens = 0
        self.output_tokens = 0
        if self.fu_firings is not None:
            self.fu_firings = {n: 0 for n in self.fu_firings}

    def values(self) -> list[int]:
        vals = [self.clock_cycles, self.input_tokens, self.output_tokens]
        if self.fu_firings is not None:
            vals.extend(self.fu_firings.values())
        return vals


class VrcDevice:
    """One coprocessor instance; all operations must be serialized by the
    caller (one in-flight transaction per device)."""

    def __init__(self, merged: MergedNetwork, table: ConfigTable,
                 base_address: int = DEFAULT_BASE_ADDRESS,
                 mem_words: int = DEFAULT_MEM_WORDS,
                 fu_monitors: bool = False,
                 cycle_budget: int = DEFAULT_CYCLE_BUDGET):
        if base_address % 4:
            raise ValueError(f"base address {base_address:#x} is not "
                             f"word aligned")
        self.merged = merged
        self.table = table
        self.base_address = base_address
        self.mem = [0] * mem_words
        self.cycle_budget = cycle_budget
        self.state = "idle"
        self.last_transaction = None  # set by the driver layer

        self.port_names = [p.name for p in merged.graph.ports]
        if not self.port_names:
            raise ValueError("merged network declares no I/O ports")
        self.region_words = mem_words // len(self.port_names)
        self._sizes = [0] * len(self.port_names)
        self._config_id = 0

        self._fu_names = ([a.name for a in merged.functional_actors()]
                          if fu_monitors else None)
        self.pmc = MonitorBank(self._fu_names)
        self.monitor_base = REG_PORT_BASE + len(self.port_names)
        self.num_regs = self.monitor_base + 2 * self.num_events

    # --- monitor catalog -------------------------------------------------

    @property
    def num_events(self) -> int:
        return 3 + (len(self._fu_names) if self._fu_names else 0)

    def event_catalog(self) -> list[tuple[int, str, str]]:
        """(monitor-window index, name, description) per event."""
        cat = [
            (0, EVENT_CLOCK, "Execution time in coprocessor clock cycles"),
            (1, EVENT_IN_TOKENS, "Tokens consumed through the input ports"),
            (2, EVENT_OUT_TOKENS, "Tokens delivered to the output ports"),
        ]
        if self._fu_names:
            for i, name in enumerate(self._fu_names):
                cat.append((3 + i, f"MDC_FU_FIRINGS_{name}",
                            f"Firings of functional unit {name}"))
        return cat

    def monitor_event_value(self, index: int) -> int:
        """64-bit event read through the bus interface (lo/hi pair)."""
        lo = self.reg_read(self.monitor_base + 2 * index)
        hi = self.reg_read(self.monitor_base + 2 * index + 1)
        return (hi << 32) | lo

    def region_offset(self, port_name: str) -> int:
        return self.port_names.index(port_name) * self.region_words

    def size_reg_offset(self, port_name: str) -> int:
        return REG_PORT_BASE + self.port_names.index(port_name)

    # --- register bank ----------------------------------------------------

    def _check_reg_offset(self, offset: int):
        if not 0 <= offset < self.num_regs:
            raise OutOfRange(
                f"register offset {offset} outside window 0..{self.num_regs - 1}")

    def reg_write(self, offset: int, value: int):
        self._check_reg_offset(offset)
        if not 0 <= value <= _WORD_MASK:
            raise OutOfRange(f"value {value:#x} does not fit a 32-bit word")
        if offset >= self.monitor_base:
            raise ReadOnlyRegister(
                f"monitor window register {offset} is read-only")
        if offset == REG_STATUS:
            raise ReadOnlyRegister("status register is read-only")
        if offset == REG_CONTROL:
            self._control(value)
            return
        if self.state == "running":
            raise BadState("configuration registers are locked while Running")
        if offset == REG_CONFIG:
            self._config_id = value
        else:
            self._sizes[offset - REG_PORT_BASE] = value

    def _control(self, value: int):
        if value & CTRL_START and value & CTRL_CLEAR:
            raise BadState("start and clear written together")
        if value & CTRL_START:
            if self.state != "idle":
                raise BadState(f"start while {self.state.capitalize()}; "
                               f"clear the device first")
            if self._config_id not in self.table.rows:
                raise BadState(f"start with unknown config_id {self._config_id}")
            self.state = "running"
        elif value & CTRL_CLEAR:
            if self.state == "running":
                raise BadState("clear while Running")
            self.pmc.clear()
            self.state = "idle"

    def reg_read(self, offset: int) -> int:
        self._check_reg_offset(offset)
        if offset == REG_CONTROL:
            return 0  # write-only register reads as zero
        if offset == REG_STATUS:
            return 1 if self.state == "done" else 0
        if offset == REG_CONFIG:
            return self._config_id
        if offset < self.monitor_base:
            return self._sizes[offset - REG_PORT_BASE]
        word = offset - self.monitor_base
        value = self.pmc.values()[word // 2]
        return (value >> 32) & _WORD_MASK if word % 2 else value & _WORD_MASK

    # --- local memory ------------------------------------------------------

    def _check_mem(self, offset: int, count: int):
        if self.state == "running":
            raise BadState("local memory is locked while Running")
        if offset < 0 or count < 0 or offset + count > len(self.mem):
            raise OutOfRange(
                f"memory access [{offset}, {offset + count}) outside "
                f"0..{len(self.mem) - 1}")

    def mem_write(self, offset: int, words: list[int]):
        self._check_mem(offset, len(words))
        for i, w in enumerate(words):
            self.mem[offset + i] = w & _WORD_MASK

    def mem_read(self, offset: int, count: int) -> list[int]:
        self._check_mem(offset, count)
        return list(self.mem[offset:offset + count])

    # --- execution ----------------------------------------------------------

    def run_to_completion(self) -> int:
        """Execute the active configuration until all expected outputs are
        produced; returns this run's cycle count (also accumulated into
        the clock counter)."""
        if self.state != "running":
            raise BadState(f"run_to_completion while {self.state.capitalize()}")
        graph = self.merged.graph
        inputs: dict[str, list[int]] = {}
        expected: dict[str, int] = {}
        for i, p in enumerate(graph.ports):
            n = self._sizes[i]
            base = i * self.region_words
            if n > self.region_words:
                self.state = "idle"
                raise OutOfRange(
                    f"size register for {p.name} ({n}) exceeds its "
                    f"{self.region_words}-word region")
            if p.direction == "in":
                inputs[p.name] = self.mem[base:base + n]
            else:
                expected[p.name] = n
        selects = self.table.rows[self._config_id]
        eng = Engine(graph, inputs, expected, selects, self.cycle_budget)
        try:
            cycles = eng.run()
        except Exception:
            self.state = "idle"  # failed runs leave no partial counters
            raise
        for i, p in enumerate(graph.ports):
            if p.direction == "out":
                out = eng.outputs[p.name]
                base = i * self.region_words
                self.mem[base:base + len(out)] = [v & _WORD_MASK for v in out]
        c = eng.counters
        self.pmc.clock_cycles += c.cycles
        self.pmc.input_tokens += c.input_tokens
        self.pmc.output_tokens += c.output_tokens
        if self.pmc.fu_firings is not None:
            for name in self.pmc.fu_firings:
                self.pmc.fu_firings[name] += c.firings.get(name, 0)
        self.state = "done"
        return cycles
