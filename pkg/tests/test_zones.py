import textwrap

import pytest

from cpsrisk.narration import SECTION_HEADERS, ArchitecturalNarration
from cpsrisk.zones import (
    ZonePolicy,
    check_zone_plausibility,
    parse_boundaries,
    parse_components,
    parse_flows,
)


@pytest.fixture(scope="module")
def policy():
    return ZonePolicy.default()


def narration_with(**section_entries):
    sections = {h: [] for h in SECTION_HEADERS}
    for key, entries in section_entries.items():
        header = {
            "components": "Key Components",
            "flows": "Data Flows & Interactions",
            "boundaries": "Trust Boundaries and Purdue Zones",
        }[key]
        sections[header] = entries
    return ArchitecturalNarration(sections=sections)


def test_parse_components():
    got = parse_components([
        "SCADA Server (scada_server, Level 2)",
        "free text without structure",
        "PLC Unit A (plc, Level 1)",
    ])
    assert got == [("SCADA Server", "scada_server", 2), ("PLC Unit A", "plc", 1)]


def test_parse_flows():
    got = parse_flows([
        "Server -> PLC via Modbus TCP (Level 2 to Level 1)",
        "not a flow bullet",
    ])
    assert got == [("Server", "PLC", "Modbus TCP", 2, 1)]


def test_parse_boundaries_with_and_without_protocol():
    got = parse_boundaries([
        "Level 2 to Level 1 via Modbus TCP",
        "Level 3 <-> Level 2",
        "prose only",
    ])
    assert [(a, b, p) for _, a, b, p in got] == [
        (2, 1, "Modbus TCP"), (3, 2, None)]


def test_membership_rules(policy):
    assert policy.membership_allowed("plc", 1) is True
    assert policy.membership_allowed("plc", 4) is False
    assert policy.membership_allowed("unheard_of_class", 3) is None


def test_flow_rules(policy):
    assert policy.flow_allowed(2, 1, "Modbus TCP") is True
    # IT protocol on the field segment
    assert policy.flow_allowed(1, 0, "HTTP") is False
    # unclassifiable protocol on an otherwise-allowed level pair: abstain
    assert policy.flow_allowed(2, 1, "ProprietaryBus") is None
    # unclassifiable protocol on a forbidden pair stays forbidden
    assert policy.flow_allowed(0, 4, "ProprietaryBus") is False


def test_plausibility_clean(policy):
    narration = narration_with(
        components=["SCADA Server (scada_server, Level 2)"],
        flows=["SCADA Server -> PLC via Modbus TCP (Level 2 to Level 1)"],
    )
    assert check_zone_plausibility(narration, policy) == []


def test_plausibility_membership_violation(policy):
    narration = narration_with(components=["Oddly Placed PLC (plc, Level 4)"])
    violations = check_zone_plausibility(narration, policy)
    assert len(violations) == 1
    assert violations[0].kind == "membership"
    assert "Oddly Placed PLC" in violations[0].subject


def test_plausibility_flow_violation(policy):
    # the case the paper's guardrail example describes: HTTP where a field
    # protocol belongs
    narration = narration_with(
        flows=["PLC -> Actuator via HTTP (Level 1 to Level 0)"])
    violations = check_zone_plausibility(narration, policy)
    assert len(violations) == 1
    assert violations[0].kind == "flow"
    assert "HTTP" in violations[0].rule


def test_unparseable_bullets_are_skipped_not_guessed(policy):
    narration = narration_with(
        components=["an unstructured remark about the network"],
        flows=["another remark"])
    assert check_zone_plausibility(narration, policy) == []


def test_policy_from_file(tmp_path):
    text = textwrap.dedent("""\
        zones:
          - {name: low, level: 0}
          - {name: high, level: 1}
        membership_rules:
          widget: [0]
        protocol_classes:
          industrial: [modbus]
        flow_rules:
          - [1, 0, industrial]
    """)
    path = tmp_path / "policy.yaml"
    path.write_text(text)
    policy = ZonePolicy.from_file(path)
    assert policy.membership_allowed("widget", 0) is True
    assert policy.membership_allowed("widget", 1) is False
    assert policy.flow_allowed(1, 0, "Modbus") is True
    assert policy.flow_allowed(0, 1, "Modbus") is False
