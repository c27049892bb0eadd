"""STRIDE-LM threat model: schema validation and canonical JSON."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import BadCategory, BadCveFormat, MissingKey, NotJson

STRIDE_LM_CATEGORIES = (
    "Spoofing",
    "Tampering",
    "Repudiation",
    "Information Disclosure",
    "Denial of Service",
    "Elevation of Privilege",
    "Lateral Movement",
)

CVE_RE = re.compile(r"CVE-\d{4}-\d{4,}")
_CVE_EXACT_RE = re.compile(r"^CVE-\d{4}-\d{4,}$")

# Expect at least this many scenarios per applicable category (warning only).
MIN_SCENARIOS_PER_CATEGORY = 3


@dataclass(frozen=True)
class ThreatScenario:
    threat_type: str
    scenario: str
    potential_impact: str
    cve_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if self.threat_type not in STRIDE_LM_CATEGORIES:
            raise BadCategory(self.threat_type)
        for cve in self.cve_ids:
            if not _CVE_EXACT_RE.match(cve):
                raise BadCveFormat(cve)

    def to_dict(self) -> dict:
        d = {
            "Threat Type": self.threat_type,
            "Scenario": self.scenario,
            "Potential Impact": self.potential_impact,
        }
        if self.cve_ids:
            d["CVE IDs"] = list(self.cve_ids)
        return d


@dataclass(frozen=True)
class ThreatModel:
    scenarios: tuple[ThreatScenario, ...]
    arch_suggestions: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "threat_model": [s.to_dict() for s in self.scenarios],
            "arch_suggestions": list(self.arch_suggestions),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def categories_present(self) -> dict[str, int]:
        counts = {c: 0 for c in STRIDE_LM_CATEGORIES}
        for s in self.scenarios:
            counts[s.threat_type] += 1
        return counts


def validate_threat_model(doc: str) -> tuple[ThreatModel, list[str]]:
    """Parse and validate a threat-model JSON document.

    Returns (model, warnings).  Under-populated categories are reported as
    warnings rather than errors: a category may simply not apply to the
    system under assessment.
    """
    try:
        data = json.loads(doc)
    except (json.JSONDecodeError, TypeError) as exc:
        raise NotJson(str(exc)) from exc
    if not isinstance(data, dict):
        raise NotJson("top level is not a JSON object")

    for key in ("threat_model", "arch_suggestions"):
        if key not in data:
            raise MissingKey(key)

    scenarios = []
    for entry in data["threat_model"]:
        explicit = entry.get("CVE IDs", entry.get("cve_ids", []))
        for cve in explicit:
            if not _CVE_EXACT_RE.match(str(cve)):
                raise BadCveFormat(str(cve))
        # CVEs referenced inline in the scenario text also count
        mentioned = CVE_RE.findall(entry.get("Scenario", ""))
        cve_ids = tuple(dict.fromkeys([*explicit, *mentioned]))
        scenarios.append(
            ThreatScenario(
                threat_type=entry.get("Threat Type", ""),
                scenario=entry.get("Scenario", ""),
                potential_impact=entry.get("Potential Impact", ""),
                cve_ids=cve_ids,
            )
        )

    model = ThreatModel(
        scenarios=tuple(scenarios),
        arch_suggestions=tuple(data["arch_suggestions"]),
    )

    warnings = []
    for cat, n in model.categories_present().items():
        if 0 < n < MIN_SCENARIOS_PER_CATEGORY:
            warnings.append(
                f"category {cat!r} has only {n} scenario(s); expected at least "
                f"{MIN_SCENARIOS_PER_CATEGORY} when applicable"
            )
    return model, warnings
