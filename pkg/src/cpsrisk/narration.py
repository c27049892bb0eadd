"""Seven-section architectural narration: parsing, rendering, validation.

The narration is the hand-off contract between the reconstruction phase and
the security-modelling phase.  Its section headers are fixed; anything that
looks like a header but is not one of the seven is rejected rather than
silently absorbed, because downstream prompts key off the exact headers.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import EmptyDocument, MissingSection, UnknownSection

SECTION_HEADERS = (
    "Attacker or Attack-Capable Entities",
    "Key Components",
    "Trust Boundaries and Purdue Zones",
    "Data Flows & Interactions",
    "Technologies and Protocols",
    "Assets and Functions",
    "Attack Entry Points",
)

# Tolerated spelling variants (LLMs swap "&"/"and" freely).
_HEADER_ALIASES = {
    "data flows and interactions": "Data Flows & Interactions",
    "trust boundaries & purdue zones": "Trust Boundaries and Purdue Zones",
    "technologies & protocols": "Technologies and Protocols",
    "attacker or attack capable entities": "Attacker or Attack-Capable Entities",
}

_CANONICAL = {h.lower(): h for h in SECTION_HEADERS}

_BULLET_RE = re.compile(r"^\s*[-*•]\s+(.*)$")
# decoration: markdown heading markers, bold markers, trailing colon
# (the colon may sit inside or outside the bold markers)
_DECOR_RE = re.compile(r"^[#\s]*\**\s*(.*?)\s*:?\s*\**\s*:?\s*$")


def _normalise_header(line: str) -> str | None:
    """Return the canonical header if this line is a section header, else None."""
    m = _DECOR_RE.match(line)
    if not m:
        return None
    text = m.group(1).strip()
    key = text.lower()
    if key in _CANONICAL:
        return _CANONICAL[key]
    if key in _HEADER_ALIASES:
        return _HEADER_ALIASES[key]
    return None


@dataclass(frozen=True)
class ArchitecturalNarration:
    """Structured output of the reconstruction phase.

    ``sections`` always carries exactly the seven canonical headers, each
    mapped to a list of plain-text entries (possibly empty).
    """

    sections: dict[str, list[str]]
    source_artifact_ids: tuple[str, ...] = ()
    system_context: str = ""

    def __post_init__(self):
        keys = tuple(self.sections.keys())
        if keys != SECTION_HEADERS:
            raise ValueError(f"sections must be exactly the canonical seven, got {keys}")

    def render(self) -> str:
        """Plain-text form, parseable back by :func:`parse_narration`."""
        lines = []
        for header in SECTION_HEADERS:
            lines.append(header)
            for entry in self.sections[header]:
                lines.append(f"- {entry}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "sections": {h: list(v) for h, v in self.sections.items()},
            "source_artifact_ids": list(self.source_artifact_ids),
            "system_context": self.system_context,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitecturalNarration":
        sections = {h: list(d["sections"].get(h, [])) for h in SECTION_HEADERS}
        return cls(
            sections=sections,
            source_artifact_ids=tuple(d.get("source_artifact_ids", ())),
            system_context=d.get("system_context", ""),
        )


def parse_narration(
    raw: str,
    source_artifact_ids: tuple[str, ...] = (),
    system_context: str = "",
) -> ArchitecturalNarration:
    """Parse the reconstruction phase's text output into a narration.

    Raises EmptyDocument, MissingSection or UnknownSection.  Any non-bullet
    line that is not one of the seven headers counts as an unknown section:
    the generation prompt forbids commentary and extra headers, so surplus
    structure is a guardrail violation, not noise to be skipped.
    """
    if not raw or not raw.strip():
        raise EmptyDocument("narration text is empty")

    sections: dict[str, list[str]] = {h: [] for h in SECTION_HEADERS}
    seen: set[str] = set()
    current: str | None = None

    for line in raw.splitlines():
        if not line.strip():
            continue
        bullet = _BULLET_RE.match(line)
        if bullet and current is not None:
            sections[current].append(bullet.group(1).strip())
            continue
        header = _normalise_header(line)
        if header is not None:
            current = header
            seen.add(header)
            continue
        if bullet and current is None:
            raise UnknownSection(bullet.group(1).strip())
        raise UnknownSection(_DECOR_RE.match(line).group(1).strip())

    for header in SECTION_HEADERS:
        if header not in seen:
            raise MissingSection(header)

    return ArchitecturalNarration(
        sections=sections,
        source_artifact_ids=tuple(source_artifact_ids),
        system_context=system_context,
    )
