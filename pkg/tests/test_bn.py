import json
import math
import random

import numpy as np
import pytest

from cpsrisk.attack_tree import NodeKind, validate_attack_tree
from cpsrisk.bn import (
    BayesianRiskModel,
    NodeParams,
    RiskNode,
    _assert_dag,
    build_model,
    infer,
    node_exposure_cpt,
    what_if,
)
from cpsrisk.errors import (
    CycleAfterOrientation,
    MissingParams,
    NumericalUnderflow,
    UnknownNode,
)
from cpsrisk.fixtures import frostygoop_model
from cpsrisk.scoring import CountermeasurePortfolio, calibrate

# ---------------------------------------------------------------------------
# brute-force oracle: full joint enumeration over the exposure variables,
# with the severe-impact marginals folded in analytically.  Written from the
# model semantics only; shares no inference code with the package.
# ---------------------------------------------------------------------------

def oracle_posteriors(model: BayesianRiskModel) -> dict[str, tuple[float, float]]:
    ids = sorted(model.nodes)
    pos = {nid: k for k, nid in enumerate(ids)}
    parents = {nid: model.parents(nid) for nid in ids}
    n = len(ids)
    att = pos[model.attacker_id]

    goal = model.goal_id
    goal_s_parents = [p for p in parents[goal]
                      if model.nodes[p].kind is not NodeKind.ATTACKER]

    total = 0.0
    p_exp = np.zeros(n)
    p_sev = np.zeros(n)
    for assign in range(1 << n):
        if not (assign >> att) & 1:
            continue                     # evidence: attacker exposed
        weight = 1.0
        for nid in ids:
            k = pos[nid]
            bit = (assign >> k) & 1
            node = model.nodes[nid]
            if nid == model.attacker_id:
                p1 = node.exposure
            else:
                exposed_parents = sum(
                    (assign >> pos[p]) & 1 for p in parents[nid])
                link = node.exposure
                if node.kind in (NodeKind.HAZARD, NodeKind.ATTACKER):
                    link = 1.0
                elif node.kind is NodeKind.VULNERABILITY:
                    link *= node.mitigation
                elif node.kind is NodeKind.ASSET and node.time_factor > 0:
                    link *= 1.0 - math.exp(-node.time_factor)
                p1 = 1.0 - (1.0 - node.leak) * (1.0 - link) ** exposed_parents
            weight *= p1 if bit else 1.0 - p1
        if weight == 0.0:
            continue
        total += weight
        for nid in ids:
            k = pos[nid]
            bit = (assign >> k) & 1
            p_exp[k] += weight * bit
            node = model.nodes[nid]
            if nid == model.attacker_id:
                continue
            if nid == goal and goal_s_parents:
                # parents' severe-impact variables are conditionally
                # independent Bernoullis given the exposures
                link = node.severe_impact
                miss = 1.0
                for p in goal_s_parents:
                    q = model.nodes[p].severe_impact * ((assign >> pos[p]) & 1)
                    miss *= 1.0 - link * q
                p_sev[k] += weight * (1.0 - miss)
            else:
                p_sev[k] += weight * node.severe_impact * bit
    assert total > 0
    return {nid: (p_exp[pos[nid]] / total, p_sev[pos[nid]] / total)
            for nid in ids}


def random_model(rng: random.Random) -> BayesianRiskModel:
    n = rng.randint(3, 10)
    ids = [f"n{i}" for i in range(n)]
    attacker_id = ids[0]
    goal_id = ids[-1]
    kinds = [NodeKind.ATTACKER] + [
        rng.choice([NodeKind.ASSET, NodeKind.VULNERABILITY, NodeKind.HAZARD])
        for _ in range(n - 2)] + [NodeKind.GOAL]
    nodes = {}
    for nid, kind in zip(ids, kinds):
        nodes[nid] = RiskNode(
            id=nid, kind=kind,
            exposure=1.0 if kind is NodeKind.ATTACKER else rng.uniform(0.05, 0.95),
            severe_impact=0.0 if kind is NodeKind.ATTACKER else rng.uniform(0.0, 1.0),
            leak=rng.choice([0.0, 0.0, rng.uniform(0.0, 0.1)]),
            time_factor=rng.choice([0.0, 0.0, rng.uniform(0.1, 3.0)]),
            mitigation=rng.choice([1.0, rng.uniform(0.2, 1.0)]),
        )
    # edges only forward in id order: guaranteed DAG
    edges = set()
    for j in range(1, n):
        for i in range(j):
            if i == 0 and j == 1:
                edges.add((ids[0], ids[1]))
            elif rng.random() < 0.35:
                edges.add((ids[i], ids[j]))
    # every non-attacker node needs some path from somewhere or it is just
    # leak-driven; both cases are legal, keep as generated
    return BayesianRiskModel(nodes=nodes, edges=tuple(sorted(edges)),
                             goal_id=goal_id, attacker_id=attacker_id)


def test_ve_matches_brute_force_enumeration():
    rng = random.Random(777)
    for trial in range(500):
        model = random_model(rng)
        expected = oracle_posteriors(model)
        summary = infer(model)
        for nid, (exp_x, exp_s) in expected.items():
            got_x, got_s = summary.per_node[nid]
            assert abs(got_x - exp_x) <= 1e-9, (trial, nid)
            assert abs(got_s - exp_s) <= 1e-9, (trial, nid)


def test_fixture_posteriors():
    summary = infer(frostygoop_model())
    assert summary.p_successful_attack == pytest.approx(0.3404, abs=5e-5)
    assert summary.p_severe_impact == pytest.approx(0.6204, abs=5e-5)
    assert f"{summary.risk_score:.2f}" == "21.12"


# --- CPT properties -----------------------------------------------------------

def test_exposure_cpt_shape_and_monotonicity():
    node = RiskNode(id="v", kind=NodeKind.VULNERABILITY,
                    exposure=0.6, severe_impact=0.3, leak=0.05)
    cpt = node_exposure_cpt(node, 3)
    assert cpt.shape == (8,)
    assert cpt[0] == pytest.approx(0.05)          # leak only
    # more exposed parents never lowers the probability
    for mask in range(8):
        for k in range(3):
            if not (mask >> k) & 1:
                assert cpt[mask | (1 << k)] >= cpt[mask]


def test_hazard_passes_exposure_through():
    node = RiskNode(id="h", kind=NodeKind.HAZARD, exposure=0.1, severe_impact=1.0)
    cpt = node_exposure_cpt(node, 1)
    assert cpt[1] == 1.0


def test_asset_time_factor_scales_link():
    slow = RiskNode(id="a", kind=NodeKind.ASSET, exposure=0.8,
                    severe_impact=0.1, time_factor=0.5)
    fast = RiskNode(id="a", kind=NodeKind.ASSET, exposure=0.8,
                    severe_impact=0.1, time_factor=5.0)
    assert node_exposure_cpt(slow, 1)[1] < node_exposure_cpt(fast, 1)[1]
    assert node_exposure_cpt(fast, 1)[1] < 0.8


# --- model construction -------------------------------------------------------

def _fixture_tree():
    from cpsrisk.fixtures import frostygoop_tree
    return frostygoop_tree()


def test_build_model_requires_params():
    with pytest.raises(MissingParams):
        build_model(_fixture_tree(), {})


def test_build_model_orients_edges():
    from cpsrisk.fixtures import frostygoop_params
    model = build_model(_fixture_tree(), frostygoop_params())
    assert ("attacker", "vul1") in model.edges
    assert ("vul1", "asset1") in model.edges
    assert ("haz1", "root") in model.edges
    assert model.nodes["attacker"].exposure == 1.0


def test_assert_dag_detects_cycle():
    nodes = {nid: RiskNode(id=nid, kind=NodeKind.ASSET, exposure=0.5,
                           severe_impact=0.1) for nid in ("a", "b")}
    model = BayesianRiskModel(nodes=nodes, edges=(("a", "b"), ("b", "a")),
                              goal_id="a", attacker_id="a")
    with pytest.raises(CycleAfterOrientation):
        _assert_dag(model)


def test_calibrated_score_as_exposure():
    params = NodeParams(exposure=calibrate(0.4982), severe_impact=0.45)
    assert params.exposure_value() == 0.4982


def test_underflow_raises():
    nodes = {
        "u": RiskNode(id="u", kind=NodeKind.ATTACKER, exposure=0.0,
                      severe_impact=0.0),
        "g": RiskNode(id="g", kind=NodeKind.GOAL, exposure=0.5,
                      severe_impact=0.5),
    }
    model = BayesianRiskModel(nodes=nodes, edges=(("u", "g"),),
                              goal_id="g", attacker_id="u")
    with pytest.raises(NumericalUnderflow):
        infer(model)


def test_model_json_round_trip():
    model = frostygoop_model()
    again = BayesianRiskModel.from_dict(json.loads(model.to_json()))
    assert again == model


# --- availability -------------------------------------------------------------

def test_availability_empty_product_is_100():
    nodes = {
        "u": RiskNode(id="u", kind=NodeKind.ATTACKER, exposure=1.0,
                      severe_impact=0.0),
        "g": RiskNode(id="g", kind=NodeKind.GOAL, exposure=0.5,
                      severe_impact=0.5),
    }
    model = BayesianRiskModel(nodes=nodes, edges=(("u", "g"),),
                              goal_id="g", attacker_id="u")
    assert infer(model).system_availability == 100.0


def test_availability_monotone_in_exposure():
    from cpsrisk.fixtures import frostygoop_params
    base_params = frostygoop_params()
    results = []
    for scale in (0.2, 0.5, 1.0):
        params = dict(base_params)
        for vid in ("vul1", "vul2"):
            p = params[vid]
            params[vid] = NodeParams(
                exposure=p.exposure_value() * scale,
                severe_impact=p.severe_impact, cvss_vector=p.cvss_vector)
        results.append(infer(build_model(_fixture_tree(), params))
                       .system_availability)
    assert results[0] >= results[1] >= results[2]


# --- what-if ------------------------------------------------------------------

def _five_node_model() -> BayesianRiskModel:
    doc = {
        "nodes": [{
            "id": "root", "label": "[G01] Goal",
            "children": [{
                "id": "asset1", "label": "[A02] Asset",
                "children": [
                    {"id": "vul1", "label": "[V03] First vulnerability",
                     "children": [{"id": "attacker", "label": "[U01] Attacker"}]},
                    {"id": "vul2", "label": "[V04] Second vulnerability",
                     "children": [{"id": "attacker"}]},
                ],
            }],
        }]
    }
    tree, violations = validate_attack_tree(json.dumps(doc))
    assert violations == []
    params = {
        "root": NodeParams(exposure=0.8, severe_impact=0.9),
        "asset1": NodeParams(exposure=0.7, severe_impact=0.4),
        "vul1": NodeParams(exposure=0.6, severe_impact=0.5),
        "vul2": NodeParams(exposure=0.5, severe_impact=0.3),
    }
    return build_model(tree, params)


def test_what_if_monotone_over_mitigation_grid():
    model = _five_node_model()
    grid = [round(0.1 * k, 1) for k in range(11)]
    for vul in ("vul1", "vul2"):
        attacks = [what_if(model, CountermeasurePortfolio({vul: m}))
                   .p_successful_attack for m in grid]
        for lower, higher in zip(attacks, attacks[1:]):
            assert lower <= higher + 1e-12


def test_what_if_identity_and_zero():
    model = _five_node_model()
    baseline = infer(model)
    identity = what_if(model, CountermeasurePortfolio({}))
    assert identity.risk_score == pytest.approx(baseline.risk_score)
    severed = what_if(model, CountermeasurePortfolio({"vul1": 0.0, "vul2": 0.0}))
    assert severed.p_successful_attack == pytest.approx(0.0)
    assert severed.risk_score == pytest.approx(0.0)


def test_what_if_rejects_unknown_node():
    with pytest.raises(UnknownNode):
        what_if(_five_node_model(), CountermeasurePortfolio({"nope": 0.5}))


def test_what_if_does_not_mutate_model():
    model = _five_node_model()
    before = model.nodes["vul1"].mitigation
    what_if(model, CountermeasurePortfolio({"vul1": 0.3}))
    assert model.nodes["vul1"].mitigation == before
