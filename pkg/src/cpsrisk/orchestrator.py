"""Three-phase prompt pipeline with validate-and-retry guardrails.

Each phase renders a versioned template, sends it to the provider, and
mechanically validates the response; on failure the validator's messages
are appended verbatim to a corrective retry prompt.  All requests and
responses are recorded in an append-only ChainRun transcript.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
import xml.etree.ElementTree as ET

from . import aml
from .attack_tree import AttackTree, NodeKind, parse_attack_tree, validate_attack_tree
from .bn import BayesianRiskModel, NodeParams, build_model
from .errors import GuardrailExhausted, ValidationError
from .ids import new_id
from .narration import ArchitecturalNarration, parse_narration
from .providers import Provider, SamplingConfig
from .threat_model import ThreatModel, validate_threat_model

DEFAULT_MAX_RETRIES = 3

RETRY_PREAMBLE = (
    "Your previous response violated the output contract. "
    "Fix ALL of the following violations and respond again, in full:\n"
)


def render_prompt(name: str, **slots) -> str:
    text = resources.files("cpsrisk.prompts").joinpath(f"{name}.txt").read_text()
    return text.format(**slots)


@dataclass
class StepRecord:
    name: str
    prompt: str
    response: str
    ok: bool
    violations: list[str] = field(default_factory=list)
    retries: int = 0
    image_count: int = 0


@dataclass
class ChainRun:
    run_id: str
    system_context: str
    cfg: SamplingConfig
    artifacts: list[str] = field(default_factory=list)   # base64 payloads
    steps: list[StepRecord] = field(default_factory=list)
    outputs: dict[str, str] = field(default_factory=dict)

    @classmethod
    def new(cls, system_context: str, cfg: SamplingConfig,
            artifacts: list[str] = (), run_id: str | None = None) -> "ChainRun":
        return cls(run_id=run_id or new_id(), system_context=system_context,
                   cfg=cfg, artifacts=list(artifacts))

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "system_context": self.system_context,
            "sampling": {"temperature": self.cfg.temperature, "top_p": self.cfg.top_p},
            "artifact_count": len(self.artifacts),
            "steps": [
                {
                    "name": s.name,
                    "prompt": s.prompt,
                    "response": s.response,
                    "ok": s.ok,
                    "violations": s.violations,
                    "retries": s.retries,
                    "image_count": s.image_count,
                }
                for s in self.steps
            ],
            "outputs": dict(self.outputs),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    def save(self, runs_dir: str | Path) -> Path:
        path = Path(runs_dir) / f"{self.run_id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")
        return path


class Orchestrator:
    def __init__(self, provider: Provider, cfg: SamplingConfig = SamplingConfig(),
                 max_retries: int = DEFAULT_MAX_RETRIES):
        self.provider = provider
        self.cfg = cfg
        self.max_retries = max_retries

    # -- retry loop ------------------------------------------------------------

    def _attempt(self, run: ChainRun, step_name: str, prompt: str, validate,
                 images: tuple[str, ...] = ()):
        """Call the provider, validate, retry with violations appended."""
        violations: list[str] = []
        for attempt in range(self.max_retries + 1):
            full_prompt = prompt
            if violations:
                full_prompt = prompt + "\n\n" + RETRY_PREAMBLE + "\n".join(
                    f"- {v}" for v in violations)
            response = self.provider.complete(
                full_prompt, images=images, cfg=self.cfg, step=step_name)
            result, violations = validate(response)
            record = StepRecord(
                name=step_name, prompt=full_prompt, response=response,
                ok=not violations, violations=list(violations),
                retries=attempt, image_count=len(images))
            run.steps.append(record)
            if not violations:
                return result
        raise GuardrailExhausted(violations)

    # -- phase 1 ---------------------------------------------------------------

    def reconstruct(self, run: ChainRun, extra_instruction: str = "") -> ArchitecturalNarration:
        if not run.artifacts:
            raise ValueError("at least one artefact is required")
        prompt = render_prompt(
            "reconstruct", system_context=run.system_context,
            temperature=self.cfg.temperature, top_p=self.cfg.top_p)
        if extra_instruction:
            prompt += f"\nAdditional practitioner instruction: {extra_instruction}\n"

        def validate(response: str):
            try:
                narration = parse_narration(
                    response, system_context=run.system_context)
                return narration, []
            except ValidationError as exc:
                return None, [str(exc)]

        narration = self._attempt(run, "reconstruct", prompt, validate,
                                  images=tuple(run.artifacts))
        run.outputs["narration"] = narration.render()
        return narration

    # -- phase 2 ---------------------------------------------------------------

    def model_threats(self, run: ChainRun,
                      narration: ArchitecturalNarration) -> tuple[ThreatModel, list[str]]:
        prompt = render_prompt(
            "threat_model", system_context=run.system_context,
            temperature=self.cfg.temperature, top_p=self.cfg.top_p,
            narration=narration.render())
        warnings_box: list[str] = []

        def validate(response: str):
            try:
                model, warnings = validate_threat_model(response)
                warnings_box[:] = warnings
                return model, []
            except ValidationError as exc:
                return None, [str(exc)]

        model = self._attempt(run, "threat_model", prompt, validate)
        run.outputs["threat_model"] = model.to_json()
        return model, warnings_box

    def model_attack_tree(self, run: ChainRun, threat_model: ThreatModel) -> AttackTree:
        prompt = render_prompt(
            "attack_tree", system_context=run.system_context,
            temperature=self.cfg.temperature, top_p=self.cfg.top_p,
            threat_model=threat_model.to_json())

        def validate(response: str):
            try:
                tree, violations = validate_attack_tree(response)
            except ValidationError as exc:
                return None, [str(exc)]
            return tree, [str(v) for v in violations]

        tree = self._attempt(run, "attack_tree", prompt, validate)
        run.outputs["attack_tree"] = tree.to_json()
        return tree

    # -- phase 3: four-step AML chain ------------------------------------------

    def build_aml_via_chain(self, run: ChainRun, tree: AttackTree,
                            params: dict[str, NodeParams]) -> str:
        model = build_model(tree, params)
        expected_xml = aml.encode(model)
        common = dict(system_context=run.system_context,
                      temperature=self.cfg.temperature, top_p=self.cfg.top_p)
        tree_json = tree.to_json()

        blocks = self._attempt(
            run, "aml_blocks",
            render_prompt("aml_blocks", tree=tree_json, **common),
            lambda r: (r, _validate_blocks(r, model)))
        edges = self._attempt(
            run, "aml_edges",
            render_prompt("aml_edges", tree=tree_json, blocks=blocks, **common),
            lambda r: (r, _validate_edges(r, model)))
        links = self._attempt(
            run, "aml_interfaces",
            render_prompt("aml_interfaces", edges=edges, **common),
            lambda r: (r, _validate_links(r, edges)))
        attributes = json.dumps(
            {nid: _node_attributes(model, nid) for nid in sorted(model.nodes)},
            indent=2)
        final = self._attempt(
            run, "aml_finalise",
            render_prompt("aml_finalise", blocks=blocks, edges=edges,
                          links=links, attributes=attributes, **common),
            lambda r: (r, _validate_final(r)))

        try:
            decoded = aml.decode(final)
            faithful = decoded == model
        except ValidationError:
            faithful = False
        if not faithful:
            run.outputs["aml_divergence"] = (
                "chain output does not decode to the constructed model; "
                "deterministic encoding substituted")
            final = expected_xml
        run.outputs["aml"] = final
        return final

    # -- refinement loop -------------------------------------------------------

    def refine(self, run: ChainRun, practitioner_note: str,
               params: dict[str, NodeParams] | None = None) -> ChainRun:
        """Re-run reconstruction with the note appended, then replay the
        downstream phases.  Prior steps stay in the transcript."""
        if "narration" not in run.outputs:
            raise ValueError("run has no narration to refine")
        if not practitioner_note.strip():
            run.steps.append(StepRecord(
                name="refine", prompt="", response="", ok=True,
                violations=[], retries=0))
            return run
        had_threats = "threat_model" in run.outputs
        had_tree = "attack_tree" in run.outputs
        had_aml = "aml" in run.outputs
        narration = self.reconstruct(run, extra_instruction=practitioner_note)
        if had_threats:
            threats, _ = self.model_threats(run, narration)
            if had_tree:
                tree = self.model_attack_tree(run, threats)
                if had_aml and params is not None:
                    self.build_aml_via_chain(run, tree, params)
        return run


def _node_attributes(model: BayesianRiskModel, nid: str) -> dict:
    node = model.nodes[nid]
    attrs = {
        "exposure": node.exposure,
        "severe_impact": node.severe_impact,
        "leak": node.leak,
        "time_factor": node.time_factor,
        "criticality": node.criticality,
        "mitigation": node.mitigation,
    }
    if node.cve_id:
        attrs["cve_id"] = node.cve_id
    if node.cvss_vector:
        attrs["cvss_vector"] = node.cvss_vector
    return attrs


def _validate_blocks(response: str, model: BayesianRiskModel) -> list[str]:
    try:
        root = ET.fromstring(response)
    except ET.ParseError as exc:
        return [f"not XML: {exc}"]
    if root.tag != "InternalElements":
        return [f"expected <InternalElements> root, got <{root.tag}>"]
    seen = {}
    for el in root.findall("InternalElement"):
        seen[el.get("ID", "")] = el.get("RoleClass", "")
    violations = []
    for nid, node in sorted(model.nodes.items()):
        if nid not in seen:
            violations.append(f"missing InternalElement for node {nid}")
        elif seen[nid] != node.kind.value:
            violations.append(
                f"node {nid}: RoleClass {seen[nid]!r} should be {node.kind.value!r}")
    for nid in sorted(set(seen) - set(model.nodes)):
        violations.append(f"unknown element id {nid}")
    return violations


def _validate_edges(response: str, model: BayesianRiskModel) -> list[str]:
    try:
        data = json.loads(response)
        edges = data["edges"]
    except (json.JSONDecodeError, TypeError, KeyError) as exc:
        return [f"expected JSON with an 'edges' key: {exc}"]
    violations = []
    for edge in edges:
        if not (isinstance(edge, list) and len(edge) == 2):
            violations.append(f"edge {edge!r} is not a [cause, effect] pair")
            continue
        for endpoint in edge:
            if endpoint not in model.nodes:
                violations.append(f"edge endpoint {endpoint!r} is not a known element")
    return violations


def _validate_links(response: str, edges_json: str) -> list[str]:
    try:
        root = ET.fromstring(response)
    except ET.ParseError as exc:
        return [f"not XML: {exc}"]
    if root.tag != "InternalLinks":
        return [f"expected <InternalLinks> root, got <{root.tag}>"]
    expected = {(f"{c}:out", f"{e}:in") for c, e in json.loads(edges_json)["edges"]}
    got = {(ln.get("RefPartnerSideA", ""), ln.get("RefPartnerSideB", ""))
           for ln in root.findall("InternalLink")}
    violations = []
    for pair in sorted(expected - got):
        violations.append(f"missing InternalLink {pair[0]} -> {pair[1]}")
    for pair in sorted(got - expected):
        violations.append(f"unexpected InternalLink {pair[0]} -> {pair[1]}")
    return violations


def _validate_final(response: str) -> list[str]:
    try:
        aml.decode(response)
    except ValidationError as exc:
        return [str(exc)]
    return []


def faithful_aml_responses(model: BayesianRiskModel) -> dict[str, list[str]]:
    """Canned responses a perfectly schema-faithful model would produce for
    the four chain steps.  Used by the mock provider and fixtures."""
    blocks_root = ET.Element("InternalElements")
    for nid in sorted(model.nodes):
        ET.SubElement(blocks_root, "InternalElement", {
            "ID": nid, "RoleClass": model.nodes[nid].kind.value})
    ET.indent(blocks_root, space="  ")
    blocks = ET.tostring(blocks_root, encoding="unicode")

    edges = json.dumps({"edges": [list(e) for e in sorted(model.edges)]}, indent=2)

    links_root = ET.Element("InternalLinks")
    for cause, effect in sorted(model.edges):
        ET.SubElement(links_root, "InternalLink", {
            "RefPartnerSideA": f"{cause}:out", "RefPartnerSideB": f"{effect}:in"})
    ET.indent(links_root, space="  ")
    links = ET.tostring(links_root, encoding="unicode")

    return {
        "aml_blocks": [blocks],
        "aml_edges": [edges],
        "aml_interfaces": [links],
        "aml_finalise": [aml.encode(model)],
    }
