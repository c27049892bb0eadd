import pytest
from hypothesis import given, strategies as st

from cpsrisk.errors import EmptyDocument, MissingSection, UnknownSection
from cpsrisk.narration import (
    SECTION_HEADERS,
    ArchitecturalNarration,
    parse_narration,
)

MINIMAL = "\n".join(SECTION_HEADERS) + "\n"

FULL = """\
Attacker or Attack-Capable Entities
- External attacker
Key Components
- SCADA Server (scada_server, Level 2)
Trust Boundaries and Purdue Zones
- Level 2 to Level 1 via Modbus TCP
Data Flows & Interactions
- SCADA Server -> PLC via Modbus TCP (Level 2 to Level 1)
Technologies and Protocols
- Modbus TCP
Assets and Functions
- PLC regulates temperature
Attack Entry Points
- Remote gateway
"""


def test_parse_minimal_empty_sections():
    narration = parse_narration(MINIMAL)
    assert tuple(narration.sections) == SECTION_HEADERS
    assert all(v == [] for v in narration.sections.values())


def test_parse_full_document():
    narration = parse_narration(FULL, source_artifact_ids=("a1",),
                                system_context="ctx")
    assert narration.sections["Key Components"] == [
        "SCADA Server (scada_server, Level 2)"]
    assert narration.source_artifact_ids == ("a1",)
    assert narration.system_context == "ctx"


def test_render_parse_idempotent():
    narration = parse_narration(FULL)
    assert parse_narration(narration.render()).sections == narration.sections
    # render is a fixed point
    assert parse_narration(narration.render()).render() == narration.render()


def test_markdown_decorated_headers_accepted():
    decorated = FULL.replace("Key Components", "## **Key Components:**")
    assert parse_narration(decorated).sections["Key Components"] == [
        "SCADA Server (scada_server, Level 2)"]


def test_header_alias_normalised():
    aliased = FULL.replace("Data Flows & Interactions",
                           "Data Flows and Interactions")
    narration = parse_narration(aliased)
    assert narration.sections["Data Flows & Interactions"] != []


def test_empty_document_rejected():
    with pytest.raises(EmptyDocument):
        parse_narration("")
    with pytest.raises(EmptyDocument):
        parse_narration("   \n\n  ")


def test_missing_section_rejected():
    truncated = "\n".join(SECTION_HEADERS[:-1]) + "\n"
    with pytest.raises(MissingSection):
        parse_narration(truncated)


def test_unknown_section_rejected():
    with pytest.raises(UnknownSection):
        parse_narration(FULL + "Network Diagram Notes\n- something\n")


def test_free_text_commentary_rejected():
    with pytest.raises(UnknownSection):
        parse_narration("Sure! Here is the analysis.\n" + FULL)


def test_bullet_before_any_header_rejected():
    with pytest.raises(UnknownSection):
        parse_narration("- stray bullet\n" + FULL)


def test_sections_must_be_canonical():
    with pytest.raises(ValueError):
        ArchitecturalNarration(sections={"Key Components": []})


def test_dict_round_trip():
    narration = parse_narration(FULL, source_artifact_ids=("x",))
    again = ArchitecturalNarration.from_dict(narration.to_dict())
    assert again == narration


_entry = st.text(
    alphabet=st.characters(whitelist_categories=("L", "N"), whitelist_characters=" "),
    min_size=1, max_size=40).map(str.strip).filter(bool)


@given(st.lists(_entry, max_size=4), st.lists(_entry, max_size=4))
def test_round_trip_arbitrary_entries(components, flows):
    sections = {h: [] for h in SECTION_HEADERS}
    sections["Key Components"] = components
    sections["Data Flows & Interactions"] = flows
    narration = ArchitecturalNarration(sections=sections)
    assert parse_narration(narration.render()).sections == sections
