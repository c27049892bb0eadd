"""Purdue-zone plausibility policy and the narration checks built on it.

Narration bullets follow a light structured grammar so the checks stay
deterministic (no language understanding):

* component bullets:  ``<name> (<class>, Level <n>)``
* flow bullets:       ``<src> -> <dst> via <protocol> (Level <a> to Level <b>)``
* boundary bullets:   ``Level <a> to Level <b> via <protocol>`` (protocol optional)

Bullets that do not match a grammar are skipped, never guessed at.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .narration import ArchitecturalNarration

_COMPONENT_RE = re.compile(
    r"^(?P<name>[^()]+?)\s*\(\s*(?P<cls>[A-Za-z_][\w /-]*?)\s*,\s*Level\s*(?P<level>\d)\s*\)"
)
_FLOW_RE = re.compile(
    r"^(?P<src>.+?)\s*->\s*(?P<dst>.+?)\s+via\s+(?P<proto>[\w /.-]+?)\s*"
    r"\(\s*Level\s*(?P<a>\d)\s*(?:to|->)\s*Level\s*(?P<b>\d)\s*\)"
)
_BOUNDARY_RE = re.compile(
    r"Level\s*(?P<a>\d)\s*(?:to|->|<->|/)\s*Level\s*(?P<b>\d)"
    r"(?:\s+via\s+(?P<proto>[\w /.-]+?))?\s*$",
    re.IGNORECASE,
)


@dataclass(frozen=True)
class ZoneViolation:
    kind: str          # "membership" | "flow"
    subject: str       # offending component or flow text
    rule: str          # human-readable statement of the violated rule

    def __str__(self) -> str:
        return f"{self.kind} violation: {self.subject} ({self.rule})"


class ZonePolicy:
    """Zone membership and flow rules loaded from a YAML policy file."""

    def __init__(self, zones, membership_rules, protocol_classes, flow_rules):
        self.zones = list(zones)
        self.membership_rules = {
            str(k).lower(): set(v) for k, v in membership_rules.items()
        }
        self.protocol_classes = {
            str(cls): {str(p).lower() for p in names}
            for cls, names in protocol_classes.items()
        }
        self.flow_rules = {(int(a), int(b), str(cls)) for a, b, cls in flow_rules}

    @classmethod
    def from_file(cls, path: str | Path) -> "ZonePolicy":
        with open(path, "r", encoding="utf-8") as fh:
            return cls._from_mapping(yaml.safe_load(fh))

    @classmethod
    def default(cls) -> "ZonePolicy":
        text = resources.files("cpsrisk.data").joinpath("default_zone_policy.yaml").read_text()
        return cls._from_mapping(yaml.safe_load(text))

    @classmethod
    def _from_mapping(cls, data: dict) -> "ZonePolicy":
        return cls(
            zones=data.get("zones", []),
            membership_rules=data.get("membership_rules", {}),
            protocol_classes=data.get("protocol_classes", {}),
            flow_rules=data.get("flow_rules", []),
        )

    def protocol_class(self, protocol: str) -> str | None:
        p = protocol.strip().lower()
        for cls, names in self.protocol_classes.items():
            if p in names:
                return cls
        return None

    def flow_allowed(self, level_a: int, level_b: int, protocol: str | None) -> bool | None:
        """True/False when decidable; None when the protocol is unclassifiable
        (and the level pair has at least one allowed class, so we abstain)."""
        pairs = {(a, b) for a, b, _ in self.flow_rules}
        if protocol is None:
            return (level_a, level_b) in pairs
        cls = self.protocol_class(protocol)
        if cls is None:
            return None if (level_a, level_b) in pairs else False
        return (level_a, level_b, cls) in self.flow_rules

    def membership_allowed(self, component_class: str, level: int) -> bool | None:
        allowed = self.membership_rules.get(component_class.strip().lower().replace(" ", "_"))
        if allowed is None:
            return None
        return level in allowed


def parse_components(entries: list[str]):
    out = []
    for entry in entries:
        m = _COMPONENT_RE.match(entry)
        if m:
            out.append((m.group("name").strip(), m.group("cls").strip(), int(m.group("level"))))
    return out


def parse_flows(entries: list[str]):
    out = []
    for entry in entries:
        m = _FLOW_RE.match(entry)
        if m:
            out.append((m.group("src").strip(), m.group("dst").strip(),
                        m.group("proto").strip(), int(m.group("a")), int(m.group("b"))))
    return out


def parse_boundaries(entries: list[str]):
    out = []
    for entry in entries:
        m = _BOUNDARY_RE.search(entry)
        if m:
            proto = m.group("proto")
            out.append((entry, int(m.group("a")), int(m.group("b")),
                        proto.strip() if proto else None))
    return out


def check_zone_plausibility(
    narration: ArchitecturalNarration, policy: ZonePolicy
) -> list[ZoneViolation]:
    """Check component placement and data flows against the policy.

    Returns one violation per offending component/flow; an empty list means
    the narration is plausible under the policy.
    """
    violations: list[ZoneViolation] = []

    for name, cls, level in parse_components(narration.sections["Key Components"]):
        ok = policy.membership_allowed(cls, level)
        if ok is False:
            allowed = sorted(policy.membership_rules[cls.lower().replace(" ", "_")])
            violations.append(ZoneViolation(
                "membership", f"{name} ({cls}) at Level {level}",
                f"class {cls!r} is only allowed at levels {allowed}",
            ))

    for src, dst, proto, a, b in parse_flows(narration.sections["Data Flows & Interactions"]):
        ok = policy.flow_allowed(a, b, proto)
        if ok is False:
            violations.append(ZoneViolation(
                "flow", f"{src} -> {dst} via {proto} (Level {a} to Level {b})",
                f"no flow rule permits {proto!r} between levels {a} and {b}",
            ))

    return violations
