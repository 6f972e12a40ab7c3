"""vrcflow: merge dataflow graphs into a multi-functional virtual
reconfigurable circuit, simulate it as a memory-mapped coprocessor with
performance monitors, and trace Hw/Sw execution through one monitoring
API."""

__version__ = "0.1.0"

from .model import Actor, DataflowGraph, Diagnostic, Edge, Endpoint, PortDecl, validate
from .xdf import parse_xdf, serialize_xdf
from .merger import (ConfigTable, MergedNetwork, extract_config_subgraph,
                     format_ctab, merge, parse_ctab, select_config)
from .engine import Engine, expected_output_counts, simulate_graph
from .device import VrcDevice, MonitorBank
from .drivers import (DriverDescriptor, TransactionLog, emit_mdc_info,
                      generate_drivers, invoke, parse_mdc_info)
from .monitoring import (EventLib, MdcComponent, PapiComponent, PapifyAction,
                         PeBinding, SwCore, SwCoreComponent, TraceRecord,
                         load_mdc_component)
from .edgedetect import (Image, KernelSpec, build_kernel_graph, kernel_spec,
                         merge_blocks, oracle_edge_detect, roberts_spec,
                         simulate_kernel_graph, sobel_spec, split_blocks)
from .runtime import (AppActor, AppGraph, HwPe, Mapping, MappingConstraints,
                      Platform, build_edge_app, execute_iteration, map_actors,
                      measure_overhead)
from .manifest import RunManifest, load_manifest

__all__ = [
    "Actor", "AppActor", "AppGraph", "ConfigTable", "DataflowGraph",
    "Diagnostic", "DriverDescriptor", "Edge", "Endpoint", "Engine",
    "EventLib", "HwPe", "Image", "KernelSpec", "Mapping",
    "MappingConstraints", "MdcComponent", "MergedNetwork", "MonitorBank",
    "PapiComponent", "PapifyAction", "PeBinding", "Platform", "PortDecl",
    "RunManifest", "SwCore", "SwCoreComponent", "TraceRecord",
    "TransactionLog", "VrcDevice", "build_edge_app", "build_kernel_graph",
    "emit_mdc_info", "execute_iteration", "expected_output_counts",
    "extract_config_subgraph", "format_ctab", "generate_drivers", "invoke",
    "kernel_spec", "load_manifest", "load_mdc_component", "map_actors",
    "measure_overhead", "merge", "merge_blocks", "oracle_edge_detect",
    "parse_ctab", "parse_mdc_info", "parse_xdf", "roberts_spec",
    "select_config", "serialize_xdf", "simulate_graph",
    "simulate_kernel_graph", "sobel_spec", "split_blocks", "validate",
]
