"""Attack tree structure, parsing and the structural rule validator.

Trees arrive as nested JSON (``{"nodes": [...]}``) where a node object may
appear inline once and be referenced by bare ``{"id": ...}`` objects
elsewhere, so shared subtrees are representable (tree-as-DAG).  The attacker
node sits at the bottom: every leaf of every attack path links down to it.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

from .errors import NotJson, ValidationError


class NodeKind(str, Enum):
    GOAL = "Goal"
    ASSET = "Asset"
    VULNERABILITY = "Vulnerability"
    HAZARD = "Hazard"
    ATTACKER = "Attacker"


_PREFIX_TO_KIND = {
    "G": NodeKind.GOAL,
    "A": NodeKind.ASSET,
    "V": NodeKind.VULNERABILITY,
    "H": NodeKind.HAZARD,
    "U": NodeKind.ATTACKER,
}

# parent kind -> child kinds allowed (attacker children are always legal:
# they are the leaf back-edges, handled separately)
LEGAL_CHILDREN = {
    NodeKind.GOAL: {NodeKind.ASSET, NodeKind.VULNERABILITY, NodeKind.HAZARD},
    NodeKind.ASSET: {NodeKind.VULNERABILITY, NodeKind.HAZARD, NodeKind.ASSET},
    NodeKind.VULNERABILITY: {NodeKind.VULNERABILITY, NodeKind.ASSET},
    NodeKind.HAZARD: {NodeKind.HAZARD, NodeKind.ASSET},
    NodeKind.ATTACKER: set(),
}


def kind_from_label(label: str) -> NodeKind | None:
    """Derive the node kind from its ``[X##]`` label prefix, if well-formed."""
    if len(label) >= 5 and label[0] == "[" and label[4] == "]":
        letter, digits = label[1], label[2:4]
        if letter in _PREFIX_TO_KIND and digits.isdigit():
            kind = _PREFIX_TO_KIND[letter]
            if kind is NodeKind.ATTACKER and digits != "01":
                return None
            return kind
    return None


@dataclass(frozen=True)
class AttackTreeNode:
    id: str
    label: str
    kind: NodeKind
    children: tuple[str, ...] = ()


@dataclass(frozen=True)
class AttackTree:
    root_id: str
    nodes: dict[str, AttackTreeNode]
    attacker_id: str | None

    @property
    def root(self) -> AttackTreeNode:
        return self.nodes[self.root_id]

    def to_json(self) -> str:
        """Canonical serialisation: DFS from the root, children sorted by id,
        each node defined inline at first visit and referenced by id after."""
        defined: set[str] = set()

        def emit(node_id: str) -> dict:
            if node_id in defined or node_id not in self.nodes:
                return {"id": node_id}
            defined.add(node_id)
            node = self.nodes[node_id]
            out: dict = {"id": node.id, "label": node.label}
            if node.children:
                out["children"] = [emit(c) for c in sorted(node.children)]
            return out

        doc = {"nodes": [emit(self.root_id)]}
        # orphan nodes (unreachable from the root) still serialise, sorted
        for node_id in sorted(self.nodes):
            if node_id not in defined:
                doc["nodes"].append(emit(node_id))
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class Violation:
    rule: str
    node_id: str
    path: tuple[str, ...]
    message: str

    def __str__(self) -> str:
        where = " -> ".join(self.path) if self.path else self.node_id
        return f"[{self.rule}] node {self.node_id} (path {where}): {self.message}"


def _walk(obj: dict, nodes: dict[str, dict], order: list[str], violations: list[Violation],
          path: tuple[str, ...]):
    node_id = str(obj.get("id", ""))
    is_definition = "label" in obj or "children" in obj
    if is_definition and nodes.get(node_id, {}).get("ref_only"):
        # definition arriving after a bare forward reference: upgrade in place
        placeholder = nodes.pop(node_id)
        order.remove(node_id)
        del placeholder
    if is_definition and node_id not in nodes:
        nodes[node_id] = {"label": obj.get("label", ""), "children": [],
                          "kind": obj.get("kind")}
        order.append(node_id)
        for child in obj.get("children", []):
            child_id = str(child.get("id", ""))
            nodes[node_id]["children"].append(child_id)
            _walk(child, nodes, order, violations, path + (node_id,))
    elif is_definition:
        # second inline definition of the same id: keep the first, record extra edges
        for child in obj.get("children", []):
            child_id = str(child.get("id", ""))
            if child_id not in nodes[node_id]["children"]:
                nodes[node_id]["children"].append(child_id)
            _walk(child, nodes, order, violations, path + (node_id,))
    elif node_id not in nodes:
        # bare reference; definition may come later in document order
        nodes.setdefault(node_id, {"label": "", "children": [], "kind": None,
                                   "ref_only": True})
        order.append(node_id)


def parse_attack_tree(doc: str) -> tuple[AttackTree, list[Violation]]:
    """Parse the JSON tree without enforcing structural rules.

    Returns the tree plus any parse-level violations (bad prefixes, kind
    mismatches).  Raises NotJson only when the document is not JSON at all.
    """
    try:
        data = json.loads(doc)
    except (json.JSONDecodeError, TypeError) as exc:
        raise NotJson(str(exc)) from exc
    if not isinstance(data, dict) or "nodes" not in data or not data["nodes"]:
        raise NotJson("expected a top-level object with a non-empty 'nodes' array")

    raw: dict[str, dict] = {}
    order: list[str] = []
    violations: list[Violation] = []
    for top in data["nodes"]:
        _walk(top, raw, order, violations, ())

    nodes: dict[str, AttackTreeNode] = {}
    attacker_ids = []
    for node_id in order:
        info = raw[node_id]
        kind = kind_from_label(info["label"])
        if kind is None:
            violations.append(Violation(
                "PrefixMismatch", node_id, (node_id,),
                f"label {info['label']!r} lacks a valid [G##]/[A##]/[V##]/[H##]/[U01] prefix",
            ))
            kind = NodeKind.ASSET  # placeholder so traversal can continue
        declared = info.get("kind")
        if declared is not None and declared != kind.value:
            violations.append(Violation(
                "PrefixMismatch", node_id, (node_id,),
                f"declared kind {declared!r} disagrees with label prefix ({kind.value})",
            ))
        if kind is NodeKind.ATTACKER:
            attacker_ids.append(node_id)
        nodes[node_id] = AttackTreeNode(
            id=node_id, label=info["label"], kind=kind,
            children=tuple(info["children"]),
        )

    root_id = str(data["nodes"][0].get("id", ""))
    attacker_id = attacker_ids[0] if attacker_ids else None
    tree = AttackTree(root_id=root_id, nodes=nodes, attacker_id=attacker_id)

    if len(data["nodes"]) > 1:
        extra_roots = [str(n.get("id", "")) for n in data["nodes"][1:]]
        for rid in extra_roots:
            violations.append(Violation(
                "MultipleRoots", rid, (rid,), "more than one top-level root node"))
    return tree, violations


def validate_attack_tree(doc: str | AttackTree) -> tuple[AttackTree | None, list[Violation]]:
    """Full structural validation.

    Returns (tree, []) when every rule holds, else (None, violations) with
    every violation found, each naming the rule, the node and a path.
    """
    if isinstance(doc, AttackTree):
        tree, violations = doc, []
    else:
        tree, violations = parse_attack_tree(doc)

    nodes = tree.nodes
    attacker_id = tree.attacker_id

    attacker_ids = [n.id for n in nodes.values() if n.kind is NodeKind.ATTACKER]
    if not attacker_ids:
        violations.append(Violation(
            "NoAttacker", tree.root_id, (tree.root_id,), "no [U01] attacker node present"))
    elif len(attacker_ids) > 1:
        for aid in attacker_ids[1:]:
            violations.append(Violation(
                "MultipleAttackers", aid, (aid,), "more than one attacker node"))

    root = nodes.get(tree.root_id)
    if root is not None and root.kind is not NodeKind.GOAL:
        violations.append(Violation(
            "RootNotGoal", tree.root_id, (tree.root_id,),
            f"root must be a Goal node, got {root.kind.value}"))
    goal_ids = [n.id for n in nodes.values() if n.kind is NodeKind.GOAL]
    for gid in goal_ids:
        if gid != tree.root_id:
            violations.append(Violation(
                "MultipleRoots", gid, (gid,), "goal node that is not the root"))

    # edge legality + leaf/attacker linkage
    for node in nodes.values():
        non_attacker_children = []
        has_attacker_child = False
        for child_id in node.children:
            child = nodes.get(child_id)
            if child is None:
                violations.append(Violation(
                    "IllegalEdge", node.id, (node.id, child_id),
                    f"edge to undefined node {child_id!r}"))
                continue
            if child.kind is NodeKind.ATTACKER:
                has_attacker_child = True
                continue
            non_attacker_children.append(child_id)
            if child.kind not in LEGAL_CHILDREN[node.kind]:
                violations.append(Violation(
                    "IllegalEdge", node.id, (node.id, child_id),
                    f"{node.kind.value} node may not have a {child.kind.value} child",
                ))
        if node.kind is NodeKind.ATTACKER and node.children:
            violations.append(Violation(
                "IllegalEdge", node.id, (node.id,) + tuple(node.children),
                "attacker node must not have children"))
        if (node.kind not in (NodeKind.ATTACKER,)
                and not non_attacker_children
                and not has_attacker_child):
            violations.append(Violation(
                "AttackerNotLinkedToLeaf", node.id, (node.id,),
                "leaf node lacks a link down to the attacker"))

    # cycles, attacker back-edges excluded
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {nid: WHITE for nid in nodes}
    stack_path: list[str] = []

    def dfs(nid: str):
        colour[nid] = GREY
        stack_path.append(nid)
        for child_id in nodes[nid].children:
            child = nodes.get(child_id)
            if child is None or child.kind is NodeKind.ATTACKER:
                continue
            if colour[child_id] == GREY:
                start = stack_path.index(child_id)
                cycle = tuple(stack_path[start:]) + (child_id,)
                violations.append(Violation(
                    "Cycle", child_id, cycle, "cycle among non-attacker edges"))
            elif colour[child_id] == WHITE:
                dfs(child_id)
        stack_path.pop()
        colour[nid] = BLACK

    for nid in sorted(nodes):
        if colour[nid] == WHITE:
            dfs(nid)

    if violations:
        return None, violations
    return tree, []
