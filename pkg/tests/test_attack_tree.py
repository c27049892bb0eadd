import json
import random

import pytest

from cpsrisk.attack_tree import (
    LEGAL_CHILDREN,
    AttackTree,
    NodeKind,
    kind_from_label,
    parse_attack_tree,
    validate_attack_tree,
)
from cpsrisk.errors import NotJson

# ---------------------------------------------------------------------------
# random legal tree generator
# ---------------------------------------------------------------------------

_PREFIX = {NodeKind.GOAL: "G", NodeKind.ASSET: "A",
           NodeKind.VULNERABILITY: "V", NodeKind.HAZARD: "H"}


def make_legal_tree(rng: random.Random, max_depth: int = 4) -> dict:
    """Nested JSON document honouring every structural rule."""
    counter = [0]

    def fresh(kind: NodeKind) -> dict:
        counter[0] += 1
        n = counter[0]
        return {"id": f"n{n}",
                "label": f"[{_PREFIX[kind]}{n % 90 + 10:02d}] node {n}",
                "_kind": kind}

    def expand(node: dict, depth: int):
        kind = node.pop("_kind")
        legal = sorted(LEGAL_CHILDREN[kind], key=lambda k: k.value)
        if depth >= max_depth or (depth > 1 and rng.random() < 0.35):
            node["children"] = [{"id": "attacker", "label": "[U01] Attacker"}]
            return
        children = [fresh(rng.choice(legal))
                    for _ in range(rng.randint(1, 3))]
        node["children"] = children
        for child in children:
            expand(child, depth + 1)

    root = fresh(NodeKind.GOAL)
    root["id"], root["label"] = "root", "[G01] " + root["label"][6:]
    expand(root, 1)
    return {"nodes": [root]}


def tree_nodes(doc: dict):
    """Flat list of (node dict, parent dict or None) pairs."""
    out = []

    def walk(node, parent):
        out.append((node, parent))
        for child in node.get("children", []):
            walk(child, node)

    walk(doc["nodes"][0], None)
    return out


def _kind_of(node) -> NodeKind:
    return kind_from_label(node["label"])


# ---------------------------------------------------------------------------
# mutation operators: each breaks exactly one rule
# ---------------------------------------------------------------------------

def mutate_remove_attacker(doc, rng):
    for node, _ in tree_nodes(doc):
        node["children"] = [c for c in node.get("children", [])
                            if c.get("label") != "[U01] Attacker"
                            and c.get("id") != "attacker"]
        if not node.get("children") and "children" in node:
            del node["children"]
    return "NoAttacker"


def mutate_second_attacker(doc, rng):
    nodes = [n for n, _ in tree_nodes(doc)
             if _kind_of(n) is not NodeKind.ATTACKER]
    target = rng.choice(nodes)
    target.setdefault("children", []).append(
        {"id": "attacker2", "label": "[U01] Attacker"})
    return "MultipleAttackers"


def mutate_root_not_goal(doc, rng):
    root = doc["nodes"][0]
    root["label"] = "[A99]" + root["label"][5:]
    return "RootNotGoal"


def mutate_second_goal(doc, rng):
    candidates = [n for n, _ in tree_nodes(doc)
                  if _kind_of(n) in (NodeKind.ASSET, NodeKind.HAZARD,
                                     NodeKind.VULNERABILITY)]
    target = rng.choice(candidates)
    target["label"] = "[G77]" + target["label"][5:]
    return "MultipleRoots"


def mutate_illegal_edge(doc, rng):
    # a hazard child under a vulnerability is illegal for every parent shape,
    # so force a vulnerability in and hang a hazard off it
    root = doc["nodes"][0]
    bad = {"id": "illegalv", "label": "[V98] planted vulnerability",
           "children": [{"id": "illegalh", "label": "[H98] planted hazard",
                         "children": [{"id": "attacker", "label": "[U01] Attacker"}]}]}
    root.setdefault("children", []).append(bad)
    return "IllegalEdge"


def mutate_leaf_without_attacker(doc, rng):
    leaves = [n for n, _ in tree_nodes(doc)
              if n.get("children")
              and all(_kind_of(c) is NodeKind.ATTACKER for c in n["children"])]
    target = rng.choice(leaves)
    del target["children"]
    return "AttackerNotLinkedToLeaf"


def mutate_cycle(doc, rng):
    # back-edge from a deep node to the root
    chains = [(n, p) for n, p in tree_nodes(doc)
              if p is not None and _kind_of(n) is not NodeKind.ATTACKER]
    node, _ = rng.choice(chains)
    node.setdefault("children", []).append({"id": "root"})
    return "Cycle"


def mutate_bad_prefix(doc, rng):
    candidates = [n for n, p in tree_nodes(doc)
                  if p is not None and _kind_of(n) is not NodeKind.ATTACKER]
    target = rng.choice(candidates)
    target["label"] = target["label"][6:]    # strip the [X##] prefix
    return "PrefixMismatch"


MUTATIONS = [
    mutate_remove_attacker,
    mutate_second_attacker,
    mutate_root_not_goal,
    mutate_second_goal,
    mutate_illegal_edge,
    mutate_leaf_without_attacker,
    mutate_cycle,
    mutate_bad_prefix,
]


def test_mutation_suite():
    """Every legal tree validates cleanly; every single-rule mutation is
    detected and names the broken rule."""
    rng = random.Random(20240817)
    n_trees = 240
    for i in range(n_trees):
        doc = make_legal_tree(rng)
        tree, violations = validate_attack_tree(json.dumps(doc))
        assert tree is not None and violations == [], (i, violations)

        mutation = MUTATIONS[i % len(MUTATIONS)]
        expected_rule = mutation(doc, rng)
        mutated_tree, violations = validate_attack_tree(json.dumps(doc))
        assert mutated_tree is None, (i, mutation.__name__)
        assert any(v.rule == expected_rule for v in violations), (
            i, mutation.__name__, [str(v) for v in violations])


# ---------------------------------------------------------------------------
# parsing and canonical serialisation
# ---------------------------------------------------------------------------

FIG_SHAPE = {
    "nodes": [{
        "id": "root", "label": "[G01] Disrupt operations",
        "children": [{
            "id": "asset1", "label": "[A02] Control server",
            "children": [{
                "id": "vul1", "label": "[V03] Weak authentication",
                "children": [{"id": "attacker", "label": "[U01] Attacker"}],
            }],
        }],
    }]
}


def test_minimal_tree_validates():
    tree, violations = validate_attack_tree(json.dumps(FIG_SHAPE))
    assert violations == []
    assert tree.root_id == "root"
    assert tree.attacker_id == "attacker"
    assert tree.nodes["vul1"].kind is NodeKind.VULNERABILITY


def test_not_json():
    with pytest.raises(NotJson):
        parse_attack_tree("not json at all")
    with pytest.raises(NotJson):
        parse_attack_tree("[]")
    with pytest.raises(NotJson):
        parse_attack_tree('{"nodes": []}')


def test_shared_subtree_reference():
    """A node may be defined once and referenced by id elsewhere (DAG)."""
    doc = {
        "nodes": [{
            "id": "root", "label": "[G01] Goal",
            "children": [
                {"id": "h1", "label": "[H11] Hazard one",
                 "children": [
                     {"id": "shared", "label": "[A12] Shared asset",
                      "children": [{"id": "attacker", "label": "[U01] Attacker"}]}]},
                {"id": "h2", "label": "[H12] Hazard two",
                 "children": [{"id": "shared"}]},
            ],
        }]
    }
    tree, violations = validate_attack_tree(json.dumps(doc))
    assert violations == []
    assert tree.nodes["h2"].children == ("shared",)


def test_forward_reference_resolves():
    doc = {
        "nodes": [{
            "id": "root", "label": "[G01] Goal",
            "children": [
                {"id": "h1", "label": "[H11] One", "children": [{"id": "shared"}]},
                {"id": "h2", "label": "[H12] Two",
                 "children": [
                     {"id": "shared", "label": "[A12] Shared asset",
                      "children": [{"id": "attacker", "label": "[U01] Attacker"}]}]},
            ],
        }]
    }
    tree, violations = validate_attack_tree(json.dumps(doc))
    assert violations == []
    assert tree.nodes["shared"].kind is NodeKind.ASSET


def test_canonical_serialisation_round_trip():
    rng = random.Random(5)
    for _ in range(25):
        doc = make_legal_tree(rng)
        tree, _ = validate_attack_tree(json.dumps(doc))
        canonical = tree.to_json()
        reparsed, violations = validate_attack_tree(canonical)
        assert violations == []
        # canonical form is a fixed point
        assert reparsed.to_json() == canonical
        # and node-for-node equal to the original
        assert {k: (v.kind, tuple(sorted(v.children)))
                for k, v in reparsed.nodes.items()} == \
               {k: (v.kind, tuple(sorted(v.children)))
                for k, v in tree.nodes.items()}


def test_kind_from_label():
    assert kind_from_label("[G01] x") is NodeKind.GOAL
    assert kind_from_label("[U01] Attacker") is NodeKind.ATTACKER
    assert kind_from_label("[U02] Attacker") is None
    assert kind_from_label("[Z01] x") is None
    assert kind_from_label("plain") is None
