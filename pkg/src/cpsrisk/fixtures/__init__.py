"""Bundled deterministic case fixture (municipal district-heating system)
and the scripted mock provider that replays it end to end."""
from __future__ import annotations

import base64
import json
from importlib import resources

from ..attack_tree import AttackTree, validate_attack_tree
from ..bn import BayesianRiskModel, NodeParams, build_model
from ..orchestrator import faithful_aml_responses
from ..providers import MockProvider

_FIX = "cpsrisk.fixtures"


def _read(name: str) -> str:
    return resources.files(_FIX).joinpath(f"frostygoop/{name}").read_text()


def frostygoop_tree() -> AttackTree:
    tree, violations = validate_attack_tree(_read("attack_tree.json"))
    assert tree is not None, violations
    return tree


def frostygoop_params() -> dict[str, NodeParams]:
    raw = json.loads(_read("params.json"))
    return {node_id: NodeParams(**fields) for node_id, fields in raw.items()}


def frostygoop_model() -> BayesianRiskModel:
    return build_model(frostygoop_tree(), frostygoop_params())


def frostygoop_artifact_b64() -> str:
    data = resources.files(_FIX).joinpath("frostygoop/dfd.png").read_bytes()
    return base64.b64encode(data).decode("ascii")


def frostygoop_script() -> dict[str, list[str]]:
    """Canned responses for every pipeline step."""
    return {
        "reconstruct": [_read("narration.txt")],
        "threat_model": [_read("threat_model.json")],
        "attack_tree": [_read("attack_tree.json")],
        "judge": ["5", "5", "5"],
        **faithful_aml_responses(frostygoop_model()),
    }


def frostygoop_provider() -> MockProvider:
    return MockProvider(frostygoop_script())
