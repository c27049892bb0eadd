import json

import pytest

from cpsrisk.errors import BadCategory, BadCveFormat, MissingKey, NotJson
from cpsrisk.threat_model import (
    STRIDE_LM_CATEGORIES,
    ThreatScenario,
    validate_threat_model,
)


def doc(scenarios, suggestions=()):
    return json.dumps({"threat_model": scenarios,
                       "arch_suggestions": list(suggestions)})


def scenario(cat="Tampering", text="Setpoints are altered.", cves=None):
    d = {"Threat Type": cat, "Scenario": text,
         "Potential Impact": "Loss of control"}
    if cves is not None:
        d["CVE IDs"] = cves
    return d


def test_valid_document():
    scenarios = [scenario(cat) for cat in STRIDE_LM_CATEGORIES
                 for _ in range(3)]
    model, warnings = validate_threat_model(doc(scenarios, ["add detail"]))
    assert len(model.scenarios) == 21
    assert warnings == []
    assert model.arch_suggestions == ("add detail",)


def test_under_populated_category_warns_not_fails():
    model, warnings = validate_threat_model(doc([scenario("Spoofing")]))
    assert len(model.scenarios) == 1
    assert len(warnings) == 1
    assert "Spoofing" in warnings[0]


def test_absent_category_no_warning():
    # a category that does not apply is silent, not warned about
    _, warnings = validate_threat_model(
        doc([scenario("Tampering") for _ in range(3)]))
    assert warnings == []


def test_not_json():
    with pytest.raises(NotJson):
        validate_threat_model("not json")
    with pytest.raises(NotJson):
        validate_threat_model('["array"]')


def test_missing_keys():
    with pytest.raises(MissingKey):
        validate_threat_model(json.dumps({"threat_model": []}))
    with pytest.raises(MissingKey):
        validate_threat_model(json.dumps({"arch_suggestions": []}))


def test_bad_category():
    with pytest.raises(BadCategory):
        validate_threat_model(doc([scenario("Phishing")]))


def test_explicit_cve_ids_validated():
    model, _ = validate_threat_model(
        doc([scenario(cves=["CVE-2023-49113"])]))
    assert model.scenarios[0].cve_ids == ("CVE-2023-49113",)
    with pytest.raises(BadCveFormat):
        validate_threat_model(doc([scenario(cves=["CVE-23-1"])]))


def test_inline_cves_extracted_and_deduplicated():
    text = "Exploits CVE-2020-14750 then reuses CVE-2020-14750 for pivoting."
    model, _ = validate_threat_model(
        doc([scenario(text=text, cves=["CVE-2020-14750", "CVE-2019-0708"])]))
    assert model.scenarios[0].cve_ids == ("CVE-2020-14750", "CVE-2019-0708")


def test_canonical_json_round_trip():
    scenarios = [scenario(cat) for cat in STRIDE_LM_CATEGORIES]
    model, _ = validate_threat_model(doc(scenarios, ["s1"]))
    again, _ = validate_threat_model(model.to_json())
    assert again == model


def test_scenario_rejects_bad_inputs_directly():
    with pytest.raises(BadCategory):
        ThreatScenario("Nonsense", "x", "y")
    with pytest.raises(BadCveFormat):
        ThreatScenario("Tampering", "x", "y", cve_ids=("CVE-1-2",))
