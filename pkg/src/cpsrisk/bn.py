"""Bayesian risk model: construction from an attack tree, noisy-OR CPTs,
exact inference by variable elimination, and countermeasure what-ifs.

Every node carries two binary variables: exposure ``X:<id>`` and severe
impact ``S:<id>``.  Exposure propagates along the attack direction
(attacker -> leaves -> ... -> goal) with noisy-OR combination, where the
per-edge link strength is the receiving node's own exposure probability
(hazards pass exposure through with link 1).  Severe impact is conditioned
on the node's own exposure; the goal aggregates its parents' severe-impact
variables with noisy-OR.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .attack_tree import AttackTree, NodeKind
from .errors import (
    CycleAfterOrientation,
    MissingParams,
    NumericalUnderflow,
    UnknownNode,
)
from .scoring import CalibratedScore, CountermeasurePortfolio


@dataclass(frozen=True)
class NodeParams:
    """Per-node inputs supplied by the analyst or derived from scoring."""

    exposure: float | CalibratedScore = 0.0
    severe_impact: float = 0.0
    leak: float = 0.0
    time_factor: float = 0.0
    criticality: float = 1.0
    cve_id: str | None = None
    cvss_vector: str | None = None

    def exposure_value(self) -> float:
        if isinstance(self.exposure, CalibratedScore):
            return self.exposure.calibrated_mean
        return float(self.exposure)


@dataclass(frozen=True)
class RiskNode:
    id: str
    kind: NodeKind
    exposure: float
    severe_impact: float
    leak: float = 0.0
    time_factor: float = 0.0
    criticality: float = 1.0
    cve_id: str | None = None
    cvss_vector: str | None = None
    mitigation: float = 1.0

    def link_strength(self) -> float:
        """Per-incoming-edge causal strength in the noisy-OR CPT."""
        if self.kind is NodeKind.ATTACKER:
            return 1.0
        if self.kind is NodeKind.HAZARD:
            return 1.0
        link = self.exposure
        if self.kind is NodeKind.VULNERABILITY:
            link *= self.mitigation
        if self.kind is NodeKind.ASSET and self.time_factor > 0:
            link *= 1.0 - math.exp(-self.time_factor)
        return link


@dataclass(frozen=True)
class BayesianRiskModel:
    nodes: dict[str, RiskNode]
    edges: tuple[tuple[str, str], ...]   # (cause, effect)
    goal_id: str
    attacker_id: str

    def parents(self, node_id: str) -> tuple[str, ...]:
        return tuple(sorted(c for c, e in self.edges if e == node_id))

    def children(self, node_id: str) -> tuple[str, ...]:
        return tuple(sorted(e for c, e in self.edges if c == node_id))

    def to_dict(self) -> dict:
        return {
            "goal_id": self.goal_id,
            "attacker_id": self.attacker_id,
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind.value,
                    "exposure": n.exposure,
                    "severe_impact": n.severe_impact,
                    "leak": n.leak,
                    "time_factor": n.time_factor,
                    "criticality": n.criticality,
                    "cve_id": n.cve_id,
                    "cvss_vector": n.cvss_vector,
                    "mitigation": n.mitigation,
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "edges": [list(e) for e in sorted(self.edges)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "BayesianRiskModel":
        nodes = {
            nd["id"]: RiskNode(
                id=nd["id"],
                kind=NodeKind(nd["kind"]),
                exposure=nd["exposure"],
                severe_impact=nd["severe_impact"],
                leak=nd.get("leak", 0.0),
                time_factor=nd.get("time_factor", 0.0),
                criticality=nd.get("criticality", 1.0),
                cve_id=nd.get("cve_id"),
                cvss_vector=nd.get("cvss_vector"),
                mitigation=nd.get("mitigation", 1.0),
            )
            for nd in d["nodes"]
        }
        return cls(
            nodes=nodes,
            edges=tuple((c, e) for c, e in d["edges"]),
            goal_id=d["goal_id"],
            attacker_id=d["attacker_id"],
        )


@dataclass(frozen=True)
class RiskSummary:
    p_successful_attack: float
    p_severe_impact: float
    risk_score: float                       # percentage
    system_availability: float              # percentage
    per_node: dict[str, tuple[float, float]]

    def to_dict(self) -> dict:
        return {
            "p_successful_attack": self.p_successful_attack,
            "p_severe_impact": self.p_severe_impact,
            "risk_score": self.risk_score,
            "system_availability": self.system_availability,
            "per_node": {
                k: {"p_exposure": v[0], "p_severe_impact": v[1]}
                for k, v in sorted(self.per_node.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def build_model(tree: AttackTree, params: dict[str, NodeParams]) -> BayesianRiskModel:
    """Orient a validated attack tree into a causal risk model.

    Tree child->parent edges become cause->effect; the attacker's incoming
    leaf links become its outgoing causal edges.
    """
    if tree.attacker_id is None:
        raise MissingParams("<attacker>")
    attacker_id = tree.attacker_id

    for node_id in tree.nodes:
        if node_id != attacker_id and node_id not in params:
            raise MissingParams(node_id)

    edges: set[tuple[str, str]] = set()
    for node in tree.nodes.values():
        for child_id in node.children:
            if child_id == attacker_id:
                edges.add((attacker_id, node.id))
            else:
                edges.add((child_id, node.id))

    nodes: dict[str, RiskNode] = {}
    for node in tree.nodes.values():
        if node.id == attacker_id:
            nodes[node.id] = RiskNode(
                id=node.id, kind=NodeKind.ATTACKER, exposure=1.0, severe_impact=0.0)
            continue
        p = params[node.id]
        nodes[node.id] = RiskNode(
            id=node.id,
            kind=node.kind,
            exposure=p.exposure_value(),
            severe_impact=p.severe_impact,
            leak=p.leak,
            time_factor=p.time_factor,
            criticality=p.criticality,
            cve_id=p.cve_id,
            cvss_vector=p.cvss_vector,
        )

    model = BayesianRiskModel(
        nodes=nodes, edges=tuple(sorted(edges)),
        goal_id=tree.root_id, attacker_id=attacker_id,
    )
    _assert_dag(model)
    return model


def _assert_dag(model: BayesianRiskModel) -> None:
    indeg = {nid: 0 for nid in model.nodes}
    for _, effect in model.edges:
        indeg[effect] += 1
    queue = sorted(nid for nid, d in indeg.items() if d == 0)
    seen = 0
    while queue:
        nid = queue.pop(0)
        seen += 1
        for child in model.children(nid):
            indeg[child] -= 1
            if indeg[child] == 0:
                queue.append(child)
    if seen != len(model.nodes):
        raise CycleAfterOrientation("edge orientation produced a cycle")


def node_exposure_cpt(node: RiskNode, parent_count: int) -> np.ndarray:
    """P(exposed | parent configuration) for all 2^n parent configurations.

    Index bit k corresponds to the k-th parent being exposed.
    """
    return _kernels.noisy_or_table(parent_count, node.link_strength(), node.leak)


# --- variable elimination -----------------------------------------------------

@dataclass
class _Factor:
    vars: tuple[str, ...]
    table: np.ndarray  # shape (2,) * len(vars)


def _factor_product(a: _Factor, b: _Factor) -> _Factor:
    out_vars = tuple(sorted(set(a.vars) | set(b.vars)))
    def expand(f: _Factor) -> np.ndarray:
        shape = [2 if v in f.vars else 1 for v in out_vars]
        perm = [f.vars.index(v) for v in out_vars if v in f.vars]
        return np.transpose(f.table, perm).reshape(shape)
    return _Factor(out_vars, expand(a) * expand(b))


def _sum_out(f: _Factor, var: str) -> _Factor:
    axis = f.vars.index(var)
    return _Factor(tuple(v for v in f.vars if v != var), f.table.sum(axis=axis))


def _reduce(f: _Factor, var: str, value: int) -> _Factor:
    axis = f.vars.index(var)
    return _Factor(tuple(v for v in f.vars if v != var),
                   np.take(f.table, value, axis=axis))


def _build_factors(model: BayesianRiskModel) -> list[_Factor]:
    factors: list[_Factor] = []
    for nid in sorted(model.nodes):
        node = model.nodes[nid]
        parents = model.parents(nid)
        x = f"X:{nid}"
        if node.kind is NodeKind.ATTACKER:
            factors.append(_Factor((x,), np.array([1.0 - node.exposure, node.exposure])))
        else:
            cpt = node_exposure_cpt(node, len(parents))
            # table over (parents..., x): axis order parent_0..parent_{n-1}, x
            n = len(parents)
            shape = (2,) * n + (2,)
            table = np.empty(shape)
            for mask in range(1 << n):
                idx = tuple((mask >> k) & 1 for k in range(n))
                p1 = cpt[mask]
                table[idx + (0,)] = 1.0 - p1
                table[idx + (1,)] = p1
            factors.append(_Factor(tuple(f"X:{p}" for p in parents) + (x,), table))

        # severe-impact variable
        if node.kind is NodeKind.ATTACKER:
            continue
        s = f"S:{nid}"
        if nid == model.goal_id and parents:
            s_parents = tuple(f"S:{p}" for p in parents
                              if model.nodes[p].kind is not NodeKind.ATTACKER)
            if s_parents:
                n = len(s_parents)
                link = node.severe_impact
                cpt = _kernels.noisy_or_table(n, link, 0.0)
                table = np.empty((2,) * n + (2,))
                for mask in range(1 << n):
                    idx = tuple((mask >> k) & 1 for k in range(n))
                    table[idx + (0,)] = 1.0 - cpt[mask]
                    table[idx + (1,)] = cpt[mask]
                factors.append(_Factor(s_parents + (s,), table))
                continue
        # non-goal (or parentless goal): S depends on own exposure only
        table = np.array([[1.0, 0.0],
                          [1.0 - node.severe_impact, node.severe_impact]])
        factors.append(_Factor((x, s), table))
    return factors


def _min_degree_order(factors: list[_Factor], keep: set[str]) -> list[str]:
    """Min-degree elimination order over all variables not in ``keep``,
    ties broken by variable name for reproducibility."""
    neighbours: dict[str, set[str]] = {}
    for f in factors:
        for v in f.vars:
            neighbours.setdefault(v, set()).update(f.vars)
    for v, ns in neighbours.items():
        ns.discard(v)
    to_eliminate = set(neighbours) - keep
    order = []
    while to_eliminate:
        v = min(to_eliminate, key=lambda u: (len(neighbours[u] & to_eliminate), u))
        order.append(v)
        to_eliminate.discard(v)
        ns = neighbours[v] - {v}
        for a in ns:
            neighbours[a].update(ns)
            neighbours[a].discard(a)
            neighbours[a].discard(v)
    return order


def _ve_query(factors: list[_Factor], query_var: str) -> float:
    """P(query_var = 1) given the already-reduced factor set."""
    factors = [f for f in factors]
    order = _min_degree_order(factors, keep={query_var})
    for var in order:
        involved = [f for f in factors if var in f.vars]
        rest = [f for f in factors if var not in f.vars]
        if not involved:
            continue
        prod = involved[0]
        for f in involved[1:]:
            prod = _factor_product(prod, f)
        factors = rest + [_sum_out(prod, var)]
    prod = factors[0]
    for f in factors[1:]:
        prod = _factor_product(prod, f)
    dist = prod.table.reshape(-1)
    z = dist.sum()
    if not np.isfinite(z) or z <= 1e-300:
        raise NumericalUnderflow("degenerate factor product (normaliser ~ 0)")
    return float(dist[1] / z)


AVAILABILITY_STRATEGIES = {}


def availability_strategy(name):
    def register(fn):
        AVAILABILITY_STRATEGIES[name] = fn
        return fn
    return register


@availability_strategy("asset-product")
def _asset_product(model: BayesianRiskModel, posteriors: dict[str, tuple[float, float]]) -> float:
    """Default metric: product over assets of (1 - p_exposure * criticality)."""
    avail = 1.0
    for nid, node in model.nodes.items():
        if node.kind is NodeKind.ASSET:
            avail *= 1.0 - posteriors[nid][0] * node.criticality
    return avail * 100.0


def availability_metric(
    model: BayesianRiskModel,
    posteriors: dict[str, tuple[float, float]],
    strategy: str = "asset-product",
) -> float:
    return AVAILABILITY_STRATEGIES[strategy](model, posteriors)


def infer(model: BayesianRiskModel, availability: str = "asset-product") -> RiskSummary:
    """Exact posteriors given the attacker exposed, via variable elimination."""
    base_factors = _build_factors(model)
    evidence_var = f"X:{model.attacker_id}"
    reduced = []
    evidence_scalar = 1.0
    for f in base_factors:
        if evidence_var in f.vars:
            f = _reduce(f, evidence_var, 1)
        if f.vars:
            reduced.append(f)
        else:
            evidence_scalar *= float(f.table)
    if not np.isfinite(evidence_scalar) or evidence_scalar <= 1e-300:
        raise NumericalUnderflow("evidence has (near-)zero probability")

    per_node: dict[str, tuple[float, float]] = {}
    for nid in sorted(model.nodes):
        if nid == model.attacker_id:
            per_node[nid] = (1.0, 0.0)
            continue
        p_exp = _ve_query(reduced, f"X:{nid}")
        p_sev = _ve_query(reduced, f"S:{nid}")
        per_node[nid] = (p_exp, p_sev)

    p_attack, p_impact = per_node[model.goal_id]
    return RiskSummary(
        p_successful_attack=p_attack,
        p_severe_impact=p_impact,
        risk_score=p_attack * p_impact * 100.0,
        system_availability=availability_metric(model, per_node, availability),
        per_node=per_node,
    )


def what_if(model: BayesianRiskModel, portfolio: CountermeasurePortfolio) -> RiskSummary:
    """Risk summary of a copy with the portfolio's mitigations applied."""
    vuln_ids = [nid for nid, n in model.nodes.items()
                if n.kind is NodeKind.VULNERABILITY]
    portfolio.validate_against(vuln_ids)
    nodes = dict(model.nodes)
    for nid, factor in portfolio.mitigations.items():
        nodes[nid] = replace(nodes[nid], mitigation=nodes[nid].mitigation * factor)
    return infer(BayesianRiskModel(
        nodes=nodes, edges=model.edges,
        goal_id=model.goal_id, attacker_id=model.attacker_id,
    ))
