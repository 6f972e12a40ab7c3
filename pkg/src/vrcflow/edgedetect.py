"""Edge-detection reference: kernels, oracle filter and streaming graphs.

The oracle computes, per pixel, g = (|gx*A| + |gy*A|) >> n and thresholds
strictly: 255 where g > threshold, else 0. Border pixels whose kernel
window leaves the image are 0, so output dimensions always equal input
dimensions. 3x3 kernels are centered (one-pixel ring zeroed); 2x2 kernels
are anchored top-left (last row and column zeroed).

build_kernel_graph produces the equivalent streaming dataflow: line
buffers hold previous rows, delays hold the previous pixel of each row,
and the two conv actors compute the horizontal/vertical gradients from
the resulting window taps. Simulating that graph on a W*H pixel stream
reproduces the oracle exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import VrcflowError
from .model import Actor, DataflowGraph, Edge, Endpoint, PortDecl

SOBEL_GX = ((-1, 0, 1), (-2, 0, 2), (-1, 0, 1))
SOBEL_GY = ((-1, -2, -1), (0, 0, 0), (1, 2, 1))
ROBERTS_GX = ((1, 0), (0, -1))
ROBERTS_GY = ((0, 1), (-1, 0))

DEFAULT_THRESHOLD = 80


class TooSmall(VrcflowError):
    """Image smaller than the kernel window."""


class NotDivisible(VrcflowError):
    """Image dimensions not divisible by the block size."""


@dataclass
class Image:
    width: int
    height: int
    data: bytes  # row-major 8-bit luma

    def __post_init__(self):
        if len(self.data) != self.width * self.height:
            raise ValueError(
                f"data length {len(self.data)} != {self.width}x{self.height}")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Image":
        arr = np.asarray(arr, dtype=np.uint8)
        h, w = arr.shape
        return cls(w, h, arr.tobytes())

    def to_array(self) -> np.ndarray:
        return np.frombuffer(self.data, dtype=np.uint8).reshape(
            self.height, self.width)


@dataclass(frozen=True)
class KernelSpec:
    name: str  # "sobel" | "roberts"
    gx: tuple
    gy: tuple
    shift: int
    threshold: int = DEFAULT_THRESHOLD

    def __post_init__(self):
        kh, kw = len(self.gx), len(self.gx[0])
        if (kh, kw) != (len(self.gy), len(self.gy[0])):
            raise ValueError("gx and gy must have the same shape")
        if self.name == "sobel" and (kh, kw) != (3, 3):
            raise ValueError("sobel kernels are 3x3")
        if self.name == "roberts" and (kh, kw) != (2, 2):
            raise ValueError("roberts kernels are 2x2")
        if not 0 <= self.threshold <= 255:
            raise ValueError("threshold must be in 0..255")

    @property
    def kh(self):
        return len(self.gx)

    @property
    def kw(self):
        return len(self.gx[0])


def sobel_spec(shift: int = 3, threshold: int = DEFAULT_THRESHOLD) -> KernelSpec:
    return KernelSpec("sobel", SOBEL_GX, SOBEL_GY, shift, threshold)


def roberts_spec(shift: int = 0, threshold: int = DEFAULT_THRESHOLD) -> KernelSpec:
    return KernelSpec("roberts", ROBERTS_GX, ROBERTS_GY, shift, threshold)


def kernel_spec(name: str, shift: int | None = None,
                threshold: int = DEFAULT_THRESHOLD) -> KernelSpec:
    if name == "sobel":
        return sobel_spec(3 if shift is None else shift, threshold)
    if name == "roberts":
        return roberts_spec(0 if shift is None else shift, threshold)
    raise ValueError(f"unknown kernel {name!r}")


def oracle_edge_detect(img: Image, spec: KernelSpec) -> Image:
    """Pure-software reference filter (sliding dot product, no kernel flip)."""
    if img.width < spec.kw or img.height < spec.kh:
        raise TooSmall(
            f"{img.width}x{img.height} image too small for "
            f"{spec.kh}x{spec.kw} kernel")
    a = img.to_array().astype(np.int64)
    kh, kw = spec.kh, spec.kw
    h, w = img.height, img.width
    gx = np.asarray(spec.gx, dtype=np.int64)
    gy = np.asarray(spec.gy, dtype=np.int64)
    # windows[r, c] = window whose top-left corner is (r, c)
    hx = np.zeros((h - kh + 1, w - kw + 1), dtype=np.int64)
    hy = np.zeros_like(hx)
    for i in range(kh):
        for j in range(kw):
            block = a[i:i + h - kh + 1, j:j + w - kw + 1]
            hx += gx[i, j] * block
            hy += gy[i, j] * block
    g = (np.abs(hx) + np.abs(hy)) >> spec.shift
    out = np.zeros((h, w), dtype=np.uint8)
    vals = np.where(g > spec.threshold, 255, 0).astype(np.uint8)
    if kh == 2:  # top-left anchored: result lands on the window corner
        out[:h - 1, :w - 1] = vals[: h - 1, : w - 1]
    else:  # centered
        out[kh // 2:h - kh // 2, kw // 2:w - kw // 2] = vals
    return Image.from_array(out)


def _conv_actor(name: str, matrix: tuple, spec: KernelSpec,
                width: int, height: int) -> Actor:
    params = {"kh": spec.kh, "kw": spec.kw, "width": width, "height": height,
              "anchor": 0 if spec.kh == 2 else 1}
    for i in range(spec.kh):
        for j in range(spec.kw):
            params[f"c_{i}_{j}"] = matrix[i][j]
    return Actor(name=name, kind="conv", params=params,
                 in_ports=[f"t_{i}_{j}" for i in range(spec.kh)
                           for j in range(spec.kw)],
                 out_ports=["out"])


def build_kernel_graph(spec: KernelSpec, width: int, height: int,
                       graph_name: str | None = None) -> DataflowGraph:
    """Streaming dataflow equivalent of oracle_edge_detect for one frame size.

    Actors whose identity is kernel-specific carry the graph name as a
    prefix; the thresholding and gradient-sum actors encode their
    parameters in the name instead, so two kernel graphs built with equal
    settings share them when merged.
    """
    if width < spec.kw or height < spec.kh:
        raise TooSmall(f"{width}x{height} too small for {spec.name}")
    g = graph_name or spec.name
    pre = g + "_"
    kh, kw = spec.kh, spec.kw

    graph = DataflowGraph(name=g, ports=[
        PortDecl("out_data", "out", 8),
        PortDecl("in_data", "in", 8),
        PortDecl("in_size", "in", 32),
    ])
    convh = _conv_actor(pre + "conv_h", spec.gx, spec, width, height)
    convv = _conv_actor(pre + "conv_v", spec.gy, spec, width, height)
    abs_sum = Actor(name=f"abs_sum_s{spec.shift}", kind="abs_sum",
                    params={"shift": spec.shift},
                    in_ports=["h", "v"], out_ports=["out"])
    thr = Actor(name=f"thr_t{spec.threshold}", kind="thr",
                params={"threshold": spec.threshold},
                in_ports=["in"], out_ports=["out"])
    graph.actors.extend([convh, convv, abs_sum, thr])

    edges = graph.edges
    burst_depth = max(64, width + 4)  # conv flushes a row-sized border burst

    def tap(src: Endpoint, i: int, j: int):
        edges.append(Edge(src, Endpoint(convh.name, f"t_{i}_{j}")))
        edges.append(Edge(src, Endpoint(convv.name, f"t_{i}_{j}")))

    # Row streams: row_src[i] carries pixel (r - (kh-1-i), c); row kh-1 is
    # the live input, each line buffer above it delays by one full row.
    row_src: list[Endpoint] = [None] * kh
    row_src[kh - 1] = Endpoint(None, "in_data")
    for i in range(kh - 2, -1, -1):
        lb = Actor(name=f"{pre}line_buffer_{kh - 1 - i}", kind="line_buffer",
                   params={"depth": width},
                   in_ports=["in"], out_ports=["out"])
        graph.actors.append(lb)
        edges.append(Edge(row_src[i + 1], Endpoint(lb.name, "in")))
        row_src[i] = Endpoint(lb.name, "out")

    # Column taps: delays walk each row stream back one pixel at a time.
    for i in range(kh):
        src = row_src[i]
        tap(src, i, kw - 1)
        for j in range(kw - 2, -1, -1):
            d = Actor(name=f"{pre}delay_{i}_{kw - 1 - j}", kind="delay",
                      params={}, in_ports=["in"], out_ports=["out"])
            graph.actors.append(d)
            edges.append(Edge(src, Endpoint(d.name, "in")))
            src = Endpoint(d.name, "out")
            tap(src, i, j)

    edges.append(Edge(Endpoint(convh.name, "out"), Endpoint(abs_sum.name, "h"),
                      fifo_depth=burst_depth))
    edges.append(Edge(Endpoint(convv.name, "out"), Endpoint(abs_sum.name, "v"),
                      fifo_depth=burst_depth))
    edges.append(Edge(Endpoint(abs_sum.name, "out"), Endpoint(thr.name, "in"),
                      fifo_depth=burst_depth))
    edges.append(Edge(Endpoint(thr.name, "out"), Endpoint(None, "out_data"),
                      fifo_depth=burst_depth))
    return graph


def simulate_kernel_graph(graph: DataflowGraph, img: Image) -> Image:
    """Feed an image through a kernel graph; returns the filtered image."""
    from .engine import simulate_graph
    inputs = {"in_data": list(img.data), "in_size": [img.height, img.width]}
    outputs, _ = simulate_graph(graph, inputs)
    return Image(img.width, img.height, bytes(outputs["out_data"]))


# --- block pipeline ----------------------------------------------------

def split_blocks(img: Image, block_w: int = 32, block_h: int = 32) -> list[Image]:
    """Tile the image into blocks in row-major block order."""
    if img.width % block_w or img.height % block_h:
        raise NotDivisible(
            f"{img.width}x{img.height} not divisible into "
            f"{block_w}x{block_h} blocks")
    arr = img.to_array()
    blocks = []
    for br in range(img.height // block_h):
        for bc in range(img.width // block_w):
            tile = arr[br * block_h:(br + 1) * block_h,
                       bc * block_w:(bc + 1) * block_w]
            blocks.append(Image.from_array(tile))
    return blocks


def merge_blocks(blocks: list[Image], width: int, height: int) -> Image:
    if not blocks:
        raise NotDivisible("no blocks to merge")
    bw, bh = blocks[0].width, blocks[0].height
    if width % bw or height % bh:
        raise NotDivisible(f"{width}x{height} not divisible by {bw}x{bh}")
    cols = width // bw
    rows = height // bh
    if len(blocks) != rows * cols:
        raise NotDivisible(
            f"expected {rows * cols} blocks for {width}x{height}, got {len(blocks)}")
    out = np.zeros((height, width), dtype=np.uint8)
    for idx, blk in enumerate(blocks):
        br, bc = divmod(idx, cols)
        out[br * bh:(br + 1) * bh, bc * bw:(bc + 1) * bw] = blk.to_array()
    return Image.from_array(out)


# --- fixture / frame IO ------------------------------------------------

def write_pgm(img: Image, path):
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(img.data)


def read_pgm(path) -> Image:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise VrcflowError(f"{path}: not a binary PGM file")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise VrcflowError(f"{path}: only maxval 255 supported")
    return Image(w, h, data[pos:pos + w * h])


@dataclass
class YuvFrame:
    """One 4:2:0 frame: full-res Y plane plus quarter-res U/V planes."""
    width: int
    height: int
    y: bytes
    u: bytes
    v: bytes

    def luma(self) -> Image:
        return Image(self.width, self.height, self.y)

    def with_luma(self, img: Image) -> "YuvFrame":
        return YuvFrame(self.width, self.height, img.data, self.u, self.v)

    def to_bytes(self) -> bytes:
        return self.y + self.u + self.v


@dataclass
class YuvReader:
    """Reads YUV 4:2:0 frames from a raw file, cycling when exhausted."""
    path: str
    width: int
    height: int
    _pos: int = field(default=0, repr=False)

    def frame_size(self) -> int:
        return self.width * self.height * 3 // 2

    def frame_count(self) -> int:
        import os
        return os.path.getsize(self.path) // self.frame_size()

    def read_frame(self) -> YuvFrame:
        size = self.frame_size()
        if self.frame_count() == 0:
            raise VrcflowError(f"{self.path}: shorter than one frame")
        with open(self.path, "rb") as fh:
            fh.seek(self._pos)
            raw = fh.read(size)
            if len(raw) < size:
                fh.seek(0)
                raw = fh.read(size)
                self._pos = size
            else:
                self._pos += size
        ylen = self.width * self.height
        clen = ylen // 4
        return YuvFrame(self.width, self.height, raw[:ylen],
                        raw[ylen:ylen + clen], raw[ylen + clen:ylen + 2 * clen])
