"""AutomationML (IEC 62714 subset) encoding of the Bayesian risk model.

The subset covers InstanceHierarchy / InternalElement / Attribute /
ExternalInterface / InternalLink.  Every node becomes one InternalElement
whose role class names the node taxonomy (Asset, Vulnerability, Hazard,
Goal, Attacker); every causal edge becomes an InternalLink from the cause's
``out`` interface to the effect's ``in`` interface.  Encoding is
deterministic: elements and links sorted by id, attributes in fixed order,
2-space indent.  See docs/aml-subset.md for the schema description.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .attack_tree import NodeKind
from .bn import BayesianRiskModel, RiskNode
from .errors import DanglingLink, DuplicateId, NotXml, UnknownRoleClass

SCHEMA_VERSION = "cpsrisk-aml-1"
ROLE_CLASS_PREFIX = "SecurityRiskLib/"

_ROLE_CLASSES = {k.value for k in NodeKind}

# (attribute name, model field, xs type) in canonical order
_NUMERIC_ATTRS = (
    ("exposure", "exposure"),
    ("severe_impact", "severe_impact"),
    ("leak", "leak"),
    ("time_factor", "time_factor"),
    ("criticality", "criticality"),
    ("mitigation", "mitigation"),
)
_TEXT_ATTRS = (("cve_id", "cve_id"), ("cvss_vector", "cvss_vector"))


@dataclass(frozen=True)
class AmlElement:
    id: str
    name: str
    role_class: str
    attributes: dict[str, object]
    interfaces: tuple[str, ...] = ("in", "out")


@dataclass(frozen=True)
class AmlDocument:
    hierarchy_name: str
    elements: tuple[AmlElement, ...]
    links: tuple[tuple[str, str], ...]   # (from "id:iface", to "id:iface")
    schema_version: str = SCHEMA_VERSION
    goal_id: str = ""
    attacker_id: str = ""


def document_from_model(model: BayesianRiskModel,
                        hierarchy_name: str = "RiskModel") -> AmlDocument:
    elements = []
    for nid in sorted(model.nodes):
        node = model.nodes[nid]
        attrs: dict[str, object] = {}
        for attr_name, field_name in _NUMERIC_ATTRS:
            attrs[attr_name] = getattr(node, field_name)
        for attr_name, field_name in _TEXT_ATTRS:
            value = getattr(node, field_name)
            if value is not None:
                attrs[attr_name] = value
        elements.append(AmlElement(
            id=nid, name=nid, role_class=node.kind.value, attributes=attrs))
    links = tuple(
        (f"{cause}:out", f"{effect}:in") for cause, effect in sorted(model.edges)
    )
    return AmlDocument(
        hierarchy_name=hierarchy_name,
        elements=tuple(elements),
        links=links,
        goal_id=model.goal_id,
        attacker_id=model.attacker_id,
    )


def encode(model: BayesianRiskModel) -> str:
    """Deterministic XML serialisation of the risk model."""
    doc = document_from_model(model)
    root = ET.Element("CAEXFile", {
        "FileName": "risk-model.aml.xml",
        "SchemaVersion": doc.schema_version,
    })
    ih = ET.SubElement(root, "InstanceHierarchy", {
        "Name": doc.hierarchy_name,
        "GoalRef": doc.goal_id,
        "AttackerRef": doc.attacker_id,
    })
    for el in doc.elements:
        ie = ET.SubElement(ih, "InternalElement", {"ID": el.id, "Name": el.name})
        ET.SubElement(ie, "RoleRequirements", {
            "RefBaseRoleClassPath": ROLE_CLASS_PREFIX + el.role_class,
        })
        for name, value in el.attributes.items():
            is_number = isinstance(value, (int, float))
            attr = ET.SubElement(ie, "Attribute", {
                "Name": name,
                "AttributeDataType": "xs:double" if is_number else "xs:string",
            })
            val = ET.SubElement(attr, "Value")
            val.text = repr(float(value)) if is_number else str(value)
        for iface in el.interfaces:
            ET.SubElement(ie, "ExternalInterface", {
                "ID": f"{el.id}:{iface}", "Name": iface,
            })
    for side_a, side_b in doc.links:
        ET.SubElement(ih, "InternalLink", {
            "Name": f"{side_a.split(':')[0]}->{side_b.split(':')[0]}",
            "RefPartnerSideA": side_a,
            "RefPartnerSideB": side_b,
        })
    ET.indent(root, space="  ")
    return (
        '<?xml version="1.0" encoding="utf-8"?>\n'
        + ET.tostring(root, encoding="unicode")
        + "\n"
    )


def decode(xml_text: str) -> BayesianRiskModel:
    """Inverse of :func:`encode`; tolerant of attribute reordering."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise NotXml(str(exc)) from exc
    if root.tag != "CAEXFile":
        raise NotXml(f"expected CAEXFile root, got {root.tag!r}")
    ih = root.find("InstanceHierarchy")
    if ih is None:
        raise NotXml("no InstanceHierarchy")

    nodes: dict[str, RiskNode] = {}
    declared_ifaces: set[str] = set()
    for ie in ih.findall("InternalElement"):
        nid = ie.get("ID", "")
        if nid in nodes:
            raise DuplicateId(nid)
        role_el = ie.find("RoleRequirements")
        role_path = role_el.get("RefBaseRoleClassPath", "") if role_el is not None else ""
        role = role_path.removeprefix(ROLE_CLASS_PREFIX)
        if role not in _ROLE_CLASSES:
            raise UnknownRoleClass(role or role_path)
        values: dict[str, object] = {}
        for attr in ie.findall("Attribute"):
            name = attr.get("Name", "")
            val_el = attr.find("Value")
            text = val_el.text if val_el is not None and val_el.text else ""
            if attr.get("AttributeDataType") == "xs:double":
                values[name] = float(text)
            else:
                values[name] = text
        for iface in ie.findall("ExternalInterface"):
            declared_ifaces.add(iface.get("ID", ""))
        nodes[nid] = RiskNode(
            id=nid,
            kind=NodeKind(role),
            exposure=float(values.get("exposure", 0.0)),
            severe_impact=float(values.get("severe_impact", 0.0)),
            leak=float(values.get("leak", 0.0)),
            time_factor=float(values.get("time_factor", 0.0)),
            criticality=float(values.get("criticality", 1.0)),
            mitigation=float(values.get("mitigation", 1.0)),
            cve_id=values.get("cve_id"),
            cvss_vector=values.get("cvss_vector"),
        )

    edges = []
    for link in ih.findall("InternalLink"):
        side_a = link.get("RefPartnerSideA", "")
        side_b = link.get("RefPartnerSideB", "")
        for side in (side_a, side_b):
            if side not in declared_ifaces:
                raise DanglingLink(side)
        edges.append((side_a.split(":")[0], side_b.split(":")[0]))

    return BayesianRiskModel(
        nodes=nodes,
        edges=tuple(sorted(edges)),
        goal_id=ih.get("GoalRef", ""),
        attacker_id=ih.get("AttackerRef", ""),
    )
