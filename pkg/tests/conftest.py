import numpy as np
import pytest

from vrcflow import (Actor, DataflowGraph, Edge, Endpoint, Image, PortDecl,
                     build_kernel_graph, merge, roberts_spec, sobel_spec)


def chain_graph(name: str, stages: list[tuple[str, str, dict]],
                depth: int = 64) -> DataflowGraph:
    """in -> stage0 -> stage1 -> ... -> out, each stage (name, kind, params)."""
    g = DataflowGraph(name=name, ports=[PortDecl("in", "in", 32),
                                        PortDecl("out", "out", 32)])
    prev = Endpoint(None, "in")
    for aname, kind, params in stages:
        g.actors.append(Actor(aname, kind, dict(params), ["in"], ["out"]))
        g.edges.append(Edge(prev, Endpoint(aname, "in"), depth))
        prev = Endpoint(aname, "out")
    g.edges.append(Edge(prev, Endpoint(None, "out"), depth))
    return g


def two_chain_pair():
    """The shared-head/shared-tail pair: A->B->C vs A->D->C."""
    g1 = chain_graph("alpha", [("A", "scale", {"factor": 3}),
                               ("B", "offset", {"addend": 5}),
                               ("C", "offset", {"addend": 1})])
    g2 = chain_graph("beta", [("A", "scale", {"factor": 3}),
                              ("D", "scale", {"factor": 2}),
                              ("C", "offset", {"addend": 1})])
    return g1, g2


def random_image(rng, w: int, h: int) -> Image:
    return Image.from_array(rng.integers(0, 256, size=(h, w), dtype=np.uint8))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


@pytest.fixture(scope="session")
def edge_networks_16():
    """Sobel+Roberts graphs and their merge at 16x16 (fast test size)."""
    sg = build_kernel_graph(sobel_spec(), 16, 16)
    rg = build_kernel_graph(roberts_spec(), 16, 16)
    merged, table = merge([sg, rg])
    return sg, rg, merged, table


@pytest.fixture(scope="session")
def edge_networks_32():
    """Sobel+Roberts graphs and their merge at the assessment block size."""
    sg = build_kernel_graph(sobel_spec(), 32, 32)
    rg = build_kernel_graph(roberts_spec(), 32, 32)
    merged, table = merge([sg, rg])
    return sg, rg, merged, table


@pytest.fixture()
def yuv_file(tmp_path, rng):
    """Factory for synthetic raw YUV 4:2:0 clips."""
    def make(width: int, height: int, frames: int = 1, name: str = "clip.yuv"):
        size = width * height * 3 // 2
        data = rng.integers(0, 256, size=frames * size, dtype=np.uint8)
        path = tmp_path / name
        path.write_bytes(data.tobytes())
        return path
    return make


def write_kernel_xdf(directory, block=32):
    """Write sobel.xdf and roberts.xdf built for one block size."""
    from vrcflow import serialize_xdf
    paths = []
    for spec in (sobel_spec(), roberts_spec()):
        g = build_kernel_graph(spec, block, block)
        p = directory / f"{spec.name}.xdf"
        p.write_text(serialize_xdf(g), encoding="utf-8")
        paths.append(p)
    return paths


def write_run_manifest(directory, out_name="out", width=64, height=32,
                       frames_name="clip.yuv", **overrides):
    """Standard manifest pointing at merge artifacts under <out_name>/."""
    settings = {
        "merged": f"{out_name}/merged.xdf",
        "ctab": f"{out_name}/ctab.txt",
        "mdcinfo": f"{out_name}/mdcInfo.xml",
        "frames": frames_name,
        "width": width,
        "height": height,
        "kernel": "roberts",
        "iterations": 1,
        "monitoring": "on",
        "out_dir": "results",
    }
    settings.update(overrides)
    lines = ["[run]"] + [f"{k} = {v}" for k, v in settings.items()]
    lines += ["", "[mapping]", "Read_YUV = Core0", "display = Core0",
              "* = Core1", "colocate = Split,Merge"]
    path = directory / "run.ini"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def edge_session(yuv_path, width, height, block=32, fu_monitors=False):
    """Full in-memory monitored session for the block-pipeline app."""
    from vrcflow import (EventLib, HwPe, Platform, SwCore, SwCoreComponent,
                        VrcDevice, build_edge_app, emit_mdc_info,
                        generate_drivers, load_mdc_component)
    from vrcflow.edgedetect import YuvReader

    sg = build_kernel_graph(sobel_spec(), block, block)
    rg = build_kernel_graph(roberts_spec(), block, block)
    merged, table = merge([sg, rg])
    device = VrcDevice(merged, table, fu_monitors=fu_monitors)
    descriptors = {d.config_name: d for d in generate_drivers(merged, table)}
    cores = [SwCore("Core0", 0), SwCore("Core1", 1)]
    platform = Platform(cores, [HwPe("ACC0", 2, device, descriptors)])
    reader = YuvReader(str(yuv_path), width, height)
    app = build_edge_app(reader, {n: n for n in descriptors}, block=block)

    lib = EventLib()
    lib.register_component(SwCoreComponent(cores))
    lib.register_component(load_mdc_component(emit_mdc_info(device), device))
    for core in cores:
        lib.configure_papify_PE(core.name, "perf_event", core.pe_id)
    lib.configure_papify_PE("ACC0", "mdc", 2)
    actions = {}
    for actor in app.actors:
        if actor.hw:
            actions[actor.name] = lib.configure_papify_actor(
                actor.name, ["mdc"],
                ["MDC_CLOCK_CYCLE", "MDC_INPUT_TOKENS", "MDC_OUTPUT_TOKENS"])
        else:
            actions[actor.name] = lib.configure_papify_actor(
                actor.name, ["perf_event"], ["PAPI_TOT_INS", "PAPI_TOT_CYC"])
    return app, platform, lib, actions
