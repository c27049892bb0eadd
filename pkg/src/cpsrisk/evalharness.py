"""Ablation study harness: variant configurations, the four reconstruction
quality metrics, run aggregation, and exact Wilcoxon signed-rank testing
against the full-pipeline baseline.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .attack_tree import AttackTree, NodeKind
from .errors import (
    EmptyGraph,
    InsufficientRuns,
    UnmappedNode,
    UnparseableJudgment,
)
from .narration import ArchitecturalNarration
from .orchestrator import render_prompt
from .providers import Provider, SamplingConfig
from .zones import ZonePolicy, parse_boundaries

SIGNIFICANCE_LEVEL = 0.10
METRIC_NAMES = ("trust_bd", "connectivity", "impossible_paths", "coherence")


@dataclass(frozen=True)
class AblationVariant:
    name: str
    multimodal: bool
    guardrails: bool
    cfg: SamplingConfig


VARIANTS = {
    "FullAstral": AblationVariant("FullAstral", True, True, SamplingConfig(0.1, 0.9)),
    "TextOnly": AblationVariant("TextOnly", False, True, SamplingConfig(0.1, 0.9)),
    "NoGuardrails": AblationVariant("NoGuardrails", True, False, SamplingConfig(0.1, 0.9)),
    "HighTemp": AblationVariant("HighTemp", True, True, SamplingConfig(0.9, 0.9)),
    "LowTopP": AblationVariant("LowTopP", True, True, SamplingConfig(0.1, 0.1)),
}

BASELINE_VARIANT = "FullAstral"


@dataclass(frozen=True)
class RunLog:
    variant: str
    case_name: str
    run_index: int
    metrics: dict[str, float | None]

    def __post_init__(self):
        conn = self.metrics.get("connectivity")
        if conn is not None and not 0.0 <= conn <= 1.0:
            raise ValueError(f"connectivity out of [0,1]: {conn}")
        coh = self.metrics.get("coherence")
        if coh is not None and not 1.0 <= coh <= 5.0:
            raise ValueError(f"coherence out of [1,5]: {coh}")

    def to_dict(self) -> dict:
        return {"variant": self.variant, "case_name": self.case_name,
                "run_index": self.run_index, "metrics": dict(self.metrics)}


# --- metrics ------------------------------------------------------------------

def count_valid_trust_boundaries(
    narration: ArchitecturalNarration, policy: ZonePolicy
) -> int:
    """Boundaries in the trust-boundary section whose level transition and
    protocol are allowed by the policy's flow rules."""
    entries = narration.sections["Trust Boundaries and Purdue Zones"]
    count = 0
    for _text, a, b, proto in parse_boundaries(entries):
        if policy.flow_allowed(a, b, proto) is True:
            count += 1
    return count


def graph_connectivity(tree: AttackTree, entry_ids: list[str]) -> float:
    """Fraction of non-attacker nodes reachable from the entry points."""
    targets = {nid for nid, n in tree.nodes.items() if n.kind is not NodeKind.ATTACKER}
    if not targets:
        raise EmptyGraph("tree has no non-attacker nodes")
    seen: set[str] = set()
    stack = [nid for nid in entry_ids if nid in tree.nodes]
    # traversal treats edges as undirected: reachability is about network
    # connectivity of the reconstructed topology, not attack direction
    incoming: dict[str, set[str]] = {nid: set() for nid in tree.nodes}
    for nid, node in tree.nodes.items():
        for child in node.children:
            if child in incoming:
                incoming[child].add(nid)
    while stack:
        nid = stack.pop()
        if nid in seen or tree.nodes[nid].kind is NodeKind.ATTACKER:
            continue
        seen.add(nid)
        node = tree.nodes[nid]
        stack.extend(c for c in node.children if c in tree.nodes)
        stack.extend(incoming[nid])
    return len(seen & targets) / len(targets)


def _leaf_paths(tree: AttackTree):
    """All root-to-leaf paths, attacker links excluded."""
    paths = []

    def walk(nid: str, path: tuple[str, ...]):
        node = tree.nodes[nid]
        kids = [c for c in node.children
                if c in tree.nodes and tree.nodes[c].kind is not NodeKind.ATTACKER
                and c not in path]
        if not kids:
            paths.append(path + (nid,))
            return
        for c in kids:
            walk(c, path + (nid,))

    if tree.root_id in tree.nodes:
        walk(tree.root_id, ())
    return paths


def count_impossible_paths(
    tree: AttackTree, policy: ZonePolicy, zone_map: dict[str, str]
) -> int:
    """Root-to-leaf paths containing at least one zone transition with no
    permitting flow rule in either direction."""
    levels = {z["name"]: int(z["level"]) for z in policy.zones}
    pairs = {(a, b) for a, b, _ in policy.flow_rules}

    def level_of(nid: str) -> int:
        if nid not in zone_map:
            raise UnmappedNode(nid)
        zone = zone_map[nid]
        if zone not in levels:
            raise UnmappedNode(nid)
        return levels[zone]

    impossible = 0
    for path in _leaf_paths(tree):
        for parent, child in zip(path, path[1:]):
            a, b = level_of(parent), level_of(child)
            if a != b and (a, b) not in pairs and (b, a) not in pairs:
                impossible += 1
                break
    return impossible


_NUMBER_RE = re.compile(r"\b([1-5](?:\.\d+)?)\b")


def coherence_score(
    narration: ArchitecturalNarration,
    judge_provider: Provider,
    k: int = 3,
    cfg: SamplingConfig = SamplingConfig(),
) -> float:
    """Likert 1-5 coherence judged by an independent model, averaged over k calls."""
    prompt = render_prompt("judge", narration=narration.render())
    scores = []
    for _ in range(k):
        response = judge_provider.complete(prompt, cfg=cfg, step="judge")
        m = _NUMBER_RE.search(response)
        if not m:
            raise UnparseableJudgment(f"no 1-5 rating in judge response: {response!r}")
        scores.append(float(m.group(1)))
    return sum(scores) / len(scores)


# --- exact Wilcoxon signed-rank test ------------------------------------------

def wilcoxon_exact(x, y) -> float:
    """Two-sided exact paired Wilcoxon signed-rank p-value.

    Zero differences dropped; ties mid-ranked.  The p-value is the exact
    probability, over all equally likely sign assignments, of a signed-rank
    statistic min(W+, W-) at most as large as observed.  Identical samples
    (no nonzero differences) give p = 1.
    """
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    diffs = [d for d in diffs if d != 0.0]
    if not diffs:
        return 1.0
    ranks = rankdata([abs(d) for d in diffs])
    # doubled ranks are integers even with mid-ranks (.5 ties)
    r2 = [round(2.0 * r) for r in ranks]
    total = sum(r2)
    w_plus2 = round(2.0 * sum(r for d, r in zip(diffs, ranks) if d > 0))
    observed = min(w_plus2, total - w_plus2)

    # distribution of W+ (doubled) by subset-sum DP
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    for r in r2:
        counts[r:] = counts[r:] + counts[:total + 1 - r]

    favourable = sum(int(c) for s, c in enumerate(counts)
                     if min(s, total - s) <= observed)
    return min(favourable / (1 << len(r2)), 1.0)


# --- aggregation --------------------------------------------------------------

@dataclass(frozen=True)
class MetricReport:
    rows: tuple[dict, ...]   # case, variant, metric, n, mean, sd, p, significant

    def to_dict(self) -> dict:
        return {"significance_level": SIGNIFICANCE_LEVEL, "rows": list(self.rows)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        """Table mirroring the ablation summary layout (mean +/- SD, * marks
        significance vs the baseline)."""
        lines = [f"{'Case':<16} {'Variant':<14} " + " ".join(
            f"{m:>18}" for m in METRIC_NAMES)]
        cells: dict[tuple[str, str], dict[str, str]] = {}
        order: list[tuple[str, str]] = []
        for row in self.rows:
            key = (row["case"], row["variant"])
            if key not in cells:
                cells[key] = {}
                order.append(key)
            if row["mean"] is None:
                cells[key][row["metric"]] = "--"
            else:
                star = "*" if row["significant"] else ""
                cells[key][row["metric"]] = f"{row['mean']:.2f}{star} ± {row['sd']:.2f}"
        for case, variant in order:
            vals = cells[(case, variant)]
            lines.append(f"{case:<16} {variant:<14} " + " ".join(
                f"{vals.get(m, '--'):>18}" for m in METRIC_NAMES))
        return "\n".join(lines) + "\n"


def aggregate(logs: list[RunLog], baseline: str = BASELINE_VARIANT) -> MetricReport:
    """Per case/variant/metric mean ± sample SD plus exact Wilcoxon p-value
    against the baseline variant, paired by run index."""
    by_group: dict[tuple[str, str, str], dict[int, float | None]] = {}
    for log in logs:
        for metric, value in log.metrics.items():
            by_group.setdefault((log.case_name, log.variant, metric), {})[
                log.run_index] = value

    rows = []
    cases = sorted({c for c, _, _ in by_group})
    variants = [v for v in VARIANTS if any(v == g[1] for g in by_group)]
    variants += sorted({g[1] for g in by_group} - set(VARIANTS))
    for case in cases:
        for variant in variants:
            for metric in METRIC_NAMES:
                series = by_group.get((case, variant, metric))
                if series is None:
                    continue
                values = [series[i] for i in sorted(series)]
                present = [v for v in values if v is not None]
                if not present:
                    rows.append({"case": case, "variant": variant, "metric": metric,
                                 "n": 0, "mean": None, "sd": None, "p": None,
                                 "significant": False})
                    continue
                mean = float(np.mean(present))
                sd = float(np.std(present, ddof=1)) if len(present) > 1 else 0.0
                p = None
                significant = False
                if variant != baseline:
                    base = by_group.get((case, baseline, metric), {})
                    paired = [(series[i], base[i]) for i in sorted(series)
                              if i in base and series[i] is not None
                              and base[i] is not None]
                    if len(paired) < 2:
                        raise InsufficientRuns(
                            f"need >= 2 paired runs for {case}/{variant}/{metric}")
                    p = wilcoxon_exact([a for a, _ in paired], [b for _, b in paired])
                    significant = p <= SIGNIFICANCE_LEVEL
                rows.append({"case": case, "variant": variant, "metric": metric,
                             "n": len(present), "mean": mean, "sd": sd,
                             "p": p, "significant": significant})
    return MetricReport(tuple(rows))


# --- fixture-log synthesis ----------------------------------------------------

def synthesize_runs(mean: float, sd: float, n: int = 10) -> list[float]:
    """Deterministic values with exactly the requested sample mean and SD
    (ddof=1): a fixed symmetric z-score template scaled and shifted."""
    if n < 2:
        raise ValueError("need n >= 2")
    template = np.linspace(-1.0, 1.0, n)
    z = (template - template.mean()) / template.std(ddof=1)
    return [float(v) for v in mean + sd * z]


def load_run_logs(path) -> list[RunLog]:
    """Read JSON-lines run logs."""
    logs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            logs.append(RunLog(variant=d["variant"], case_name=d["case_name"],
                               run_index=d["run_index"], metrics=d["metrics"]))
    return logs


def save_run_logs(logs: list[RunLog], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for log in logs:
            fh.write(json.dumps(log.to_dict()) + "\n")
