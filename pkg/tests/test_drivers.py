import pytest

from vrcflow import (VrcDevice, emit_mdc_info, generate_drivers, invoke,
                     load_mdc_component, merge, oracle_edge_detect,
                     parse_mdc_info, roberts_spec, sobel_spec)
from vrcflow.device import CTRL_CLEAR, REG_CONTROL
from vrcflow.errors import (BadState, BaseAddressMismatch, CountMismatch,
                            SchemaViolation, SizeMismatch)
from conftest import chain_graph, random_image, two_chain_pair


@pytest.fixture(scope="module")
def edge_setup(edge_networks_32):
    _, _, merged, table = edge_networks_32
    device = VrcDevice(merged, table)
    descriptors = {d.config_name: d for d in generate_drivers(merged, table)}
    return merged, table, device, descriptors


def fresh(device):
    if device.state == "done":
        device.reg_write(REG_CONTROL, CTRL_CLEAR)
    return device


# --- descriptors -------------------------------------------------------------

def test_roberts_descriptor_port_order(edge_setup):
    _, _, _, descriptors = edge_setup
    ports = [p.name for p in descriptors["roberts"].ports]
    assert ports == ["out_data", "in_data", "in_size"]


def test_descriptor_regions_disjoint(edge_setup):
    _, _, _, descriptors = edge_setup
    for desc in descriptors.values():
        spans = sorted((p.region_offset, p.region_offset + p.region_words)
                       for p in desc.ports)
        for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
            assert a1 <= b0


def test_single_graph_descriptor_two_ports():
    g = chain_graph("solo", [("a", "scale", {"factor": 2})])
    merged, table = merge([g])
    (desc,) = generate_drivers(merged, table)
    assert len(desc.ports) == 2
    assert desc.config_id == 1


def test_two_config_descriptors_match_ctab():
    merged, table = merge(list(two_chain_pair()))
    descs = generate_drivers(merged, table)
    assert sorted(d.config_id for d in descs) == sorted(table.rows)
    assert {d.config_name for d in descs} == set(merged.source_ids)


# --- invoke -------------------------------------------------------------------

def test_invoke_matches_oracle_both_configs(edge_setup, rng):
    merged, table, device, descriptors = edge_setup
    img = random_image(rng, 32, 32)
    for name, spec in (("roberts", roberts_spec()), ("sobel", sobel_spec())):
        out = invoke(fresh(device), descriptors[name],
                     {"in_data": list(img.data), "in_size": [32, 32]})
        assert bytes(out["out_data"]) == oracle_edge_detect(img, spec).data
        assert len(out["out_data"]) == 1024


def test_invoke_missing_port_is_size_mismatch(edge_setup):
    _, _, device, descriptors = edge_setup
    with pytest.raises(SizeMismatch):
        invoke(fresh(device), descriptors["roberts"], {"in_data": [0] * 1024})


def test_invoke_unknown_port_is_size_mismatch(edge_setup):
    _, _, device, descriptors = edge_setup
    with pytest.raises(SizeMismatch):
        invoke(fresh(device), descriptors["roberts"],
               {"in_data": [0] * 1024, "in_size": [32, 32], "extra": [1]})


def test_invoke_rejects_descriptor_for_other_memory_layout(edge_networks_16):
    _, _, merged, table = edge_networks_16
    device = VrcDevice(merged, table, mem_words=4096)
    (desc,) = [d for d in generate_drivers(merged, table)  # default layout
               if d.config_name == "roberts"]
    with pytest.raises(SizeMismatch, match="layout"):
        invoke(device, desc, {"in_data": [0] * 256, "in_size": [16, 16]})


def test_invoke_oversized_input_rejected(edge_setup):
    _, _, device, descriptors = edge_setup
    desc = descriptors["roberts"]
    too_many = desc.input_ports()[0].region_words + 1
    with pytest.raises(SizeMismatch):
        invoke(fresh(device), desc,
               {"in_data": [0] * too_many, "in_size": [32, 32]})


def test_invoke_zero_size(edge_setup):
    _, _, device, descriptors = edge_setup
    out = invoke(fresh(device), descriptors["roberts"],
                 {"in_data": [], "in_size": []})
    assert out == {"out_data": []}
    assert device.state == "done"
    assert device.pmc.output_tokens == 0


def test_invoke_requires_idle_device(edge_setup, rng):
    _, _, device, descriptors = edge_setup
    img = random_image(rng, 32, 32)
    invoke(fresh(device), descriptors["roberts"],
           {"in_data": list(img.data), "in_size": [32, 32]})
    with pytest.raises(BadState):
        invoke(device, descriptors["roberts"],
               {"in_data": list(img.data), "in_size": [32, 32]})


def test_transaction_log_word_counts(edge_setup, rng):
    _, _, device, descriptors = edge_setup
    img = random_image(rng, 32, 32)
    device.reg_write(REG_CONTROL, CTRL_CLEAR)
    invoke(device, descriptors["roberts"],
           {"in_data": list(img.data), "in_size": [32, 32]})
    log = device.last_transaction
    assert log.input_words() == 1026  # 1024 pixels + 2 size words
    assert log.input_words() == device.pmc.input_tokens
    assert log.output_words() == 1024 == device.pmc.output_tokens
    assert log.polls() >= 2
    lines = log.to_json_lines().strip().splitlines()
    assert len(lines) == len(log.entries)


def test_invoke_result_independent_of_monitoring(edge_networks_32, rng):
    _, _, merged, table = edge_networks_32
    img = random_image(rng, 32, 32)
    outs = []
    for fu in (False, True):
        device = VrcDevice(merged, table, fu_monitors=fu)
        descs = {d.config_name: d for d in generate_drivers(merged, table)}
        outs.append(invoke(device, descs["sobel"],
                           {"in_data": list(img.data), "in_size": [32, 32]}))
    assert outs[0] == outs[1]


# --- mdcInfo ------------------------------------------------------------------

def test_emit_mdc_info_accelerator_level(edge_setup):
    _, _, device, _ = edge_setup
    text = emit_mdc_info(device)
    base, events = parse_mdc_info(text)
    assert base == device.base_address
    assert [name for _, name, _ in events] == [
        "MDC_CLOCK_CYCLE", "MDC_INPUT_TOKENS", "MDC_OUTPUT_TOKENS"]
    assert [i for i, _, _ in events] == [0, 1, 2]
    assert "<nbEvents>3</nbEvents>" in text
    assert f"0x{device.base_address:08x}" in text


def test_emit_mdc_info_with_fu_monitors(edge_networks_32):
    _, _, merged, table = edge_networks_32
    device = VrcDevice(merged, table, fu_monitors=True)
    n_fu = len(merged.functional_actors())
    _, events = parse_mdc_info(emit_mdc_info(device))
    assert len(events) == 3 + n_fu


def test_seven_fu_network_emits_ten_events():
    g = chain_graph("seven", [(f"a{i}", "offset", {"addend": i})
                              for i in range(7)])
    merged, table = merge([g])
    device = VrcDevice(merged, table, mem_words=1024, fu_monitors=True)
    assert device.num_events == 10
    _, events = parse_mdc_info(emit_mdc_info(device))
    assert len(events) == 10


def test_mdc_info_round_trip(edge_setup):
    _, _, device, _ = edge_setup
    comp = load_mdc_component(emit_mdc_info(device), device)
    assert [(e.index, e.name) for e in comp.events] == \
        [(i, n) for i, n, _ in device.event_catalog()]


def test_listing_shaped_hand_written_file_loads(edge_setup):
    _, _, device, _ = edge_setup
    text = f"""<mdcInfo>
  <baseAddress>0x{device.base_address:08x}</baseAddress>
    <nbEvents>3</nbEvents>
    <event>
      <index>0</index>
      <name>MDC_CLOCK_CYCLE</name>
      <desc>Execution time</desc>
    </event>
    <event>
      <index>1</index>
      <name>MDC_INPUT_TOKENS</name>
      <desc>Input tokens</desc>
    </event>
    <event>
      <index>2</index>
      <name>MDC_OUTPUT_TOKENS</name>
      <desc>Output tokens</desc>
    </event>
</mdcInfo>"""
    comp = load_mdc_component(text, device)
    assert len(comp.events) == 3


def test_nb_events_mismatch_rejected(edge_setup):
    _, _, device, _ = edge_setup
    bad = emit_mdc_info(device).replace("<nbEvents>3</nbEvents>",
                                        "<nbEvents>2</nbEvents>")
    with pytest.raises(CountMismatch):
        load_mdc_component(bad, device)


def test_base_address_mismatch_rejected(edge_setup):
    _, _, device, _ = edge_setup
    bad = emit_mdc_info(device).replace(
        f"0x{device.base_address:08x}", "0x10000000")
    with pytest.raises(BaseAddressMismatch):
        load_mdc_component(bad, device)


def test_mdc_info_schema_violations(edge_setup):
    _, _, device, _ = edge_setup
    with pytest.raises(SchemaViolation):
        parse_mdc_info("<mdcInfo><nbEvents>0</nbEvents></mdcInfo>")
    with pytest.raises(SchemaViolation):
        parse_mdc_info("<wrong/>")
    with pytest.raises(SchemaViolation):
        parse_mdc_info(emit_mdc_info(device).replace("<mdcInfo>", "<mdcInfo><junk/>"))
