"""Functional-class registry: the table of actor kinds a graph may use.

Each kind supplies parameter/port validation and a behavior factory used
by the execution engine. Behaviors come in two flavors:

* ``Simple1`` subclasses consume one token per input port and produce one
  token on a single output port per firing (the engine has a fast path
  for these).
* General behaviors additionally expose ``in_needs`` (tokens required per
  input port) and ``out_counts()`` (tokens produced on each output port by
  the *next* firing) so the engine can check FIFO space exactly before
  committing a firing.

Token values are plain Python ints (32-bit signed semantics are enforced
at the device boundary, not here).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

from .model import Actor

ANCHOR_TOPLEFT = 0
ANCHOR_CENTER = 1


class Simple1:
    """1-token-in-per-port, 1-token-out behaviors; subclass sets fire1."""
    __slots__ = ()

    def fire1(self, values: tuple) -> int:  # pragma: no cover - interface
        raise NotImplementedError


class _LineBuffer(Simple1):
    """Delays the stream by one image row (``depth`` tokens), zero-filled."""
    __slots__ = ("buf",)

    def __init__(self, depth: int):
        self.buf = deque([0] * depth)

    def fire1(self, values):
        self.buf.append(values[0])
        return self.buf.popleft()


class _Delay(Simple1):
    """Remembers one previous token; first output is the init value."""
    __slots__ = ("prev",)

    def __init__(self, init: int = 0):
        self.prev = init

    def fire1(self, values):
        out, self.prev = self.prev, values[0]
        return out


class _AbsSum(Simple1):
    __slots__ = ("shift",)

    def __init__(self, shift: int):
        self.shift = shift

    def fire1(self, values):
        return (abs(values[0]) + abs(values[1])) >> self.shift


class _Threshold(Simple1):
    __slots__ = ("threshold",)

    def __init__(self, threshold: int):
        self.threshold = threshold

    def fire1(self, values):
        return 255 if values[0] > self.threshold else 0


class _Scale(Simple1):
    __slots__ = ("factor",)

    def __init__(self, factor: int):
        self.factor = factor

    def fire1(self, values):
        return values[0] * self.factor


class _Offset(Simple1):
    __slots__ = ("addend",)

    def __init__(self, addend: int):
        self.addend = addend

    def fire1(self, values):
        return values[0] + self.addend


class _Sum2(Simple1):
    __slots__ = ()

    def fire1(self, values):
        return values[0] + values[1]


class _Conv:
    """Windowed gradient over tap streams with built-in border policy.

    The tap ports t_i_j carry the image window that *ends* at the pixel
    currently entering the pipeline; the actor works out which output
    position that window serves, buffers interior gradients, and emits
    output pixels strictly in row-major order, padding border positions
    with zeros. Over a full W*H stimulus it produces exactly W*H tokens,
    but per firing the production count varies (0 during pipeline fill,
    a row-sized burst when flushing trailing borders), which is why it
    reports ``out_counts`` exactly instead of a constant rate.
    """
    __slots__ = ("coeffs", "w", "h", "total", "dr", "dc",
                 "min_r", "max_r", "min_c", "max_c",
                 "j", "next_out", "ready", "in_needs")

    def __init__(self, coeffs: list[int], kh: int, kw: int,
                 width: int, height: int, anchor: int):
        self.coeffs = coeffs
        self.w = width
        self.h = height
        self.total = width * height
        if anchor == ANCHOR_TOPLEFT:
            pad_r = pad_c = 0
            self.min_r, self.max_r = 0, height - kh
            self.min_c, self.max_c = 0, width - kw
        else:
            pad_r, pad_c = (kh - 1) // 2, (kw - 1) // 2
            self.min_r, self.max_r = pad_r, height - 1 - (kh - 1 - pad_r)
            self.min_c, self.max_c = pad_c, width - 1 - (kw - 1 - pad_c)
        self.dr = (kh - 1) - pad_r
        self.dc = (kw - 1) - pad_c
        self.j = 0
        self.next_out = 0
        self.ready: dict[int, int] = {}
        self.in_needs = (1,) * (kh * kw)

    def _interior(self, pr: int, pc: int) -> bool:
        return (self.min_r <= pr <= self.max_r
                and self.min_c <= pc <= self.max_c)

    def _capture_pos(self) -> int:
        """Linear output position this firing's window serves, or -1."""
        r, c = divmod(self.j, self.w)
        pr, pc = r - self.dr, c - self.dc
        if pr >= 0 and pc >= 0 and self._interior(pr, pc):
            return pr * self.w + pc
        return -1

    def out_counts(self) -> tuple[int]:
        cap = self._capture_pos()
        n = 0
        nxt = self.next_out
        w = self.w
        while nxt < self.total:
            pr, pc = divmod(nxt, w)
            if self._interior(pr, pc) and nxt != cap and nxt not in self.ready:
                break
            n += 1
            nxt += 1
        return (n,)

    def fire(self, args: list[list[int]]) -> list[list[int]]:
        cap = self._capture_pos()
        if cap >= 0:
            acc = 0
            coeffs = self.coeffs
            for i, vals in enumerate(args):
                acc += coeffs[i] * vals[0]
            self.ready[cap] = acc
        self.j += 1
        out: list[int] = []
        nxt = self.next_out
        w = self.w
        ready = self.ready
        while nxt < self.total:
            pr, pc = divmod(nxt, w)
            if self._interior(pr, pc):
                if nxt not in ready:
                    break
                out.append(ready.pop(nxt))
            else:
                out.append(0)
            nxt += 1
        self.next_out = nxt
        return [out]


class _SboxMux:
    """k:1 switch: forwards tokens from the selected input only."""
    __slots__ = ("k", "select", "in_needs")

    def __init__(self, k: int, select: int = 0):
        self.k = k
        self.select = 0
        self.in_needs: tuple[int, ...] = ()
        self.set_select(select)

    def set_select(self, v: int):
        if not 0 <= v < self.k:
            raise ValueError(f"select {v} out of range for {self.k}-way sbox")
        self.select = v
        self.in_needs = tuple(1 if i == v else 0 for i in range(self.k))

    def out_counts(self):
        return (1,)

    def fire(self, args):
        return [[args[self.select][0]]]


class _SboxDemux:
    """1:k switch: routes each token to the selected output branch."""
    __slots__ = ("k", "select", "in_needs")

    def __init__(self, k: int, select: int = 0):
        self.k = k
        self.select = 0
        self.in_needs = (1,)
        self.set_select(select)

    def set_select(self, v: int):
        if not 0 <= v < self.k:
            raise ValueError(f"select {v} out of range for {self.k}-way sbox")
        self.select = v

    def out_counts(self):
        return tuple(1 if i == self.select else 0 for i in range(self.k))

    def fire(self, args):
        return [[args[0][0]] if i == self.select else []
                for i in range(self.k)]


# --- registry ----------------------------------------------------------

@dataclass(frozen=True)
class KindSpec:
    name: str
    check: Callable[[Actor], str | None]
    make: Callable[[Actor], object]


def _need_params(actor: Actor, *names: str) -> str | None:
    missing = [n for n in names if n not in actor.params]
    if missing:
        return f"missing params: {', '.join(missing)}"
    return None


def _check_ports(actor: Actor, n_in: int, n_out: int) -> str | None:
    if len(actor.in_ports) != n_in or len(actor.out_ports) != n_out:
        return (f"kind {actor.kind!r} needs {n_in} in/{n_out} out ports, "
                f"got {len(actor.in_ports)}/{len(actor.out_ports)}")
    return None


def _check_line_buffer(a: Actor):
    err = _check_ports(a, 1, 1) or _need_params(a, "depth")
    if err:
        return err
    if a.params["depth"] < 1:
        return "depth must be >= 1"
    return None


def _check_delay(a: Actor):
    return _check_ports(a, 1, 1)


def _check_conv(a: Actor):
    err = _need_params(a, "kh", "kw", "width", "height", "anchor")
    if err:
        return err
    kh, kw = a.params["kh"], a.params["kw"]
    if kh < 1 or kw < 1:
        return "kernel dims must be >= 1"
    if a.params["anchor"] not in (ANCHOR_TOPLEFT, ANCHOR_CENTER):
        return "anchor must be 0 (top-left) or 1 (center)"
    if a.params["width"] < kw or a.params["height"] < kh:
        return "image dims must be >= kernel dims"
    coeff_names = [f"c_{i}_{j}" for i in range(kh) for j in range(kw)]
    err = _need_params(a, *coeff_names)
    if err:
        return err
    expected = [f"t_{i}_{j}" for i in range(kh) for j in range(kw)]
    if a.in_ports != expected:
        return f"conv taps must be {expected}"
    return _check_ports(a, kh * kw, 1)


def _check_abs_sum(a: Actor):
    err = _check_ports(a, 2, 1) or _need_params(a, "shift")
    if err:
        return err
    if a.params["shift"] < 0:
        return "shift must be >= 0"
    return None


def _check_thr(a: Actor):
    return _check_ports(a, 1, 1) or _need_params(a, "threshold")


def _check_sbox(a: Actor):
    n_in, n_out = len(a.in_ports), len(a.out_ports)
    if n_in >= 2 and n_out == 1:
        k = n_in
        if a.in_ports != [f"in_{i}" for i in range(k)] or a.out_ports != ["out"]:
            return "mux sbox ports must be in_0..in_k-1 / out"
    elif n_in == 1 and n_out >= 2:
        k = n_out
        if a.in_ports != ["in"] or a.out_ports != [f"out_{i}" for i in range(k)]:
            return "demux sbox ports must be in / out_0..out_k-1"
    else:
        return "sbox needs k>=2 inputs and 1 output, or the mirrored form"
    sel = a.params.get("select", 0)
    if not 0 <= sel < k:
        return f"select {sel} out of range 0..{k - 1}"
    return None


def _make_conv(a: Actor):
    kh, kw = a.params["kh"], a.params["kw"]
    coeffs = [a.params[f"c_{i}_{j}"] for i in range(kh) for j in range(kw)]
    return _Conv(coeffs, kh, kw, a.params["width"], a.params["height"],
                 a.params["anchor"])


def _make_sbox(a: Actor):
    if len(a.in_ports) > 1:
        return _SboxMux(len(a.in_ports), a.params.get("select", 0))
    return _SboxDemux(len(a.out_ports), a.params.get("select", 0))


REGISTRY: dict[str, KindSpec] = {}


def _register(name, check, make):
    REGISTRY[name] = KindSpec(name, check, make)


_register("line_buffer", _check_line_buffer,
          lambda a: _LineBuffer(a.params["depth"]))
_register("delay", _check_delay, lambda a: _Delay(a.params.get("init", 0)))
_register("conv", _check_conv, _make_conv)
_register("abs_sum", _check_abs_sum, lambda a: _AbsSum(a.params["shift"]))
_register("thr", _check_thr, lambda a: _Threshold(a.params["threshold"]))
_register("sbox", _check_sbox, _make_sbox)
_register("scale", lambda a: _check_ports(a, 1, 1) or _need_params(a, "factor"),
          lambda a: _Scale(a.params["factor"]))
_register("offset", lambda a: _check_ports(a, 1, 1) or _need_params(a, "addend"),
          lambda a: _Offset(a.params["addend"]))
_register("sum2", lambda a: _check_ports(a, 2, 1), lambda a: _Sum2())


def make_behavior(actor: Actor):
    return REGISTRY[actor.kind].make(actor)


def is_sbox(actor: Actor) -> bool:
    return actor.kind == "sbox"
