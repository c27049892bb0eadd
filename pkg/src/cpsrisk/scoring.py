"""CVSS v3.1 parsing and base scoring, EPSS ingestion, and the calibrated
exposure probabilities that parameterise the risk model.

Base exposure is (cvss/10) blended 50/50 with EPSS when an EPSS score is
available, then scaled by the attack feasibility modifier.  Calibration
models exposure as Beta(base*k, (1-base)*k) so the mean stays at the base
value while the concentration k sets the credible-interval width.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

from scipy.stats import beta as beta_dist

from .errors import BadValue, MissingMetric, UnknownMetric, UnknownNode

# --- CVSS v3.1 base metrics ---------------------------------------------------

_METRIC_ORDER = ("AV", "AC", "PR", "UI", "S", "C", "I", "A")

_METRIC_VALUES = {
    "AV": ("N", "A", "L", "P"),
    "AC": ("L", "H"),
    "PR": ("N", "L", "H"),
    "UI": ("N", "R"),
    "S": ("U", "C"),
    "C": ("H", "L", "N"),
    "I": ("H", "L", "N"),
    "A": ("H", "L", "N"),
}

_AV_W = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2}
_AC_W = {"L": 0.77, "H": 0.44}
_PR_W_UNCHANGED = {"N": 0.85, "L": 0.62, "H": 0.27}
_PR_W_CHANGED = {"N": 0.85, "L": 0.68, "H": 0.5}
_UI_W = {"N": 0.85, "R": 0.62}
_CIA_W = {"H": 0.56, "L": 0.22, "N": 0.0}

DEFAULT_EPSS_WEIGHT = 0.5
DEFAULT_CONCENTRATION = 100.0
DEFAULT_FEASIBILITY = 0.5


@dataclass(frozen=True)
class CvssVector:
    av: str
    ac: str
    pr: str
    ui: str
    s: str
    c: str
    i: str
    a: str

    def __str__(self) -> str:
        vals = (self.av, self.ac, self.pr, self.ui, self.s, self.c, self.i, self.a)
        return "/".join(f"{m}:{v}" for m, v in zip(_METRIC_ORDER, vals))


def parse_cvss(vector: str, permissive: bool = False) -> CvssVector:
    """Parse a CVSS v3.1 base vector.

    A missing metric is an error unless ``permissive`` is set, in which case
    it is completed with "N" (None) -- how truncated vectors in advisories
    have to be read.
    """
    found: dict[str, str] = {}
    text = vector.strip()
    if text.upper().startswith("CVSS:3.1/"):
        text = text[len("CVSS:3.1/"):]
    for part in text.split("/"):
        if not part:
            continue
        if ":" not in part:
            raise UnknownMetric(part)
        metric, value = part.split(":", 1)
        metric = metric.upper()
        if metric not in _METRIC_VALUES:
            raise UnknownMetric(metric)
        if value.upper() not in _METRIC_VALUES[metric]:
            raise BadValue(metric, value)
        found[metric] = value.upper()
    for metric in _METRIC_ORDER:
        if metric not in found:
            if permissive and metric in ("C", "I", "A"):
                found[metric] = "N"
            else:
                raise MissingMetric(metric)
    return CvssVector(*(found[m] for m in _METRIC_ORDER))


def _roundup(value: float) -> float:
    # CVSS v3.1 Appendix A "Roundup": smallest number with one decimal >= value,
    # computed on a scaled integer to dodge float representation artifacts.
    scaled = round(value * 100000)
    if scaled % 10000 == 0:
        return scaled / 100000.0
    return (math.floor(scaled / 10000) + 1) / 10.0


def cvss_base_score(v: CvssVector) -> float:
    """CVSS v3.1 base score in [0, 10], rounded up to one decimal."""
    iss = 1.0 - (1.0 - _CIA_W[v.c]) * (1.0 - _CIA_W[v.i]) * (1.0 - _CIA_W[v.a])
    if v.s == "U":
        impact = 6.42 * iss
    else:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15
    pr_w = (_PR_W_CHANGED if v.s == "C" else _PR_W_UNCHANGED)[v.pr]
    exploitability = 8.22 * _AV_W[v.av] * _AC_W[v.ac] * pr_w * _UI_W[v.ui]
    if impact <= 0:
        return 0.0
    if v.s == "U":
        return _roundup(min(impact + exploitability, 10.0))
    return _roundup(min(1.08 * (impact + exploitability), 10.0))


# --- exposure probabilities ---------------------------------------------------

@dataclass(frozen=True)
class FeasibilityModifier:
    """Scales raw exposure for attacker capability and defensive posture."""

    factor: float = DEFAULT_FEASIBILITY
    rationale: str = "moderate attacker capability, typical OT posture"

    def __post_init__(self):
        if not (0.0 < self.factor <= 1.0):
            raise ValueError(f"feasibility factor must be in (0, 1], got {self.factor}")


@dataclass(frozen=True)
class CalibratedScore:
    base_exposure: float
    calibrated_mean: float
    ci95: tuple[float, float]
    severe_impact: float = 0.0

    def __post_init__(self):
        low, high = self.ci95
        if not (0.0 <= low <= self.calibrated_mean + 1e-12 and
                self.calibrated_mean <= high + 1e-12 and high <= 1.0):
            raise ValueError(
                f"CI must satisfy 0 <= low <= mean <= high <= 1, got "
                f"mean={self.calibrated_mean}, ci={self.ci95}")


def base_exposure(
    v: CvssVector,
    epss: float | None = None,
    f: FeasibilityModifier = FeasibilityModifier(),
    epss_weight: float = DEFAULT_EPSS_WEIGHT,
) -> float:
    score = cvss_base_score(v) / 10.0
    if epss is not None:
        score = (1.0 - epss_weight) * score + epss_weight * epss
    return min(max(score * f.factor, 0.0), 1.0)


def calibrate(
    base: float,
    concentration: float = DEFAULT_CONCENTRATION,
    severe_impact: float = 0.0,
) -> CalibratedScore:
    """Beta-calibrated exposure with a 95% credible interval.

    Mean equals ``base`` exactly; the boundaries 0 and 1 degenerate to a
    point interval.
    """
    if not 0.0 <= base <= 1.0:
        raise ValueError(f"base probability out of range: {base}")
    if concentration <= 0:
        raise ValueError(f"concentration must be positive: {concentration}")
    if base == 0.0 or base == 1.0:
        return CalibratedScore(base, base, (base, base), severe_impact)
    a = base * concentration
    b = (1.0 - base) * concentration
    low, high = beta_dist.ppf([0.025, 0.975], a, b)
    return CalibratedScore(base, base, (float(low), float(high)), severe_impact)


def apply_portfolio(score: CalibratedScore, mitigation: float) -> CalibratedScore:
    """Scale the calibrated exposure by a mitigation factor in [0, 1].

    0 = fully mitigated, 1 = untouched.  Severe impact is unchanged: the
    consequence of a successful exploit is a property of the system, not of
    how likely the exploit is.
    """
    if not 0.0 <= mitigation <= 1.0:
        raise ValueError(f"mitigation factor out of range: {mitigation}")
    low, high = score.ci95
    return replace(
        score,
        calibrated_mean=score.calibrated_mean * mitigation,
        ci95=(low * mitigation, high * mitigation),
    )


@dataclass(frozen=True)
class CountermeasurePortfolio:
    """Per-vulnerability mitigation factors for what-if analysis."""

    mitigations: dict[str, float]

    def __post_init__(self):
        for node_id, factor in self.mitigations.items():
            if not 0.0 <= factor <= 1.0:
                raise ValueError(
                    f"mitigation factor for {node_id} out of range: {factor}")

    def validate_against(self, known_ids) -> None:
        known = set(known_ids)
        for node_id in self.mitigations:
            if node_id not in known:
                raise UnknownNode(node_id)


# --- EPSS feed ----------------------------------------------------------------

def load_epss_csv(path: str | Path) -> dict[str, float]:
    """Read the public EPSS feed layout: rows of (cve, epss, percentile).

    Comment lines starting with '#' (the feed's model-version banner) are
    skipped.
    """
    scores: dict[str, float] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.reader(rows)
        for row in reader:
            if not row or row[0].strip().lower() == "cve":
                continue
            cve, epss = row[0].strip(), float(row[1])
            if not 0.0 <= epss <= 1.0:
                raise ValueError(f"EPSS score out of range for {cve}: {epss}")
            scores[cve] = epss
    return scores
