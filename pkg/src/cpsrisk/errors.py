"""Exception hierarchy shared across the workbench."""


class CpsRiskError(Exception):
    """Base class for all workbench errors."""


class ValidationError(CpsRiskError):
    """A document failed schema or structural validation."""


# --- narration ---

class EmptyDocument(ValidationError):
    pass


class MissingSection(ValidationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing section: {name!r}")


class UnknownSection(ValidationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown section: {name!r}")


# --- threat model ---

class NotJson(ValidationError):
    pass


class MissingKey(ValidationError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"missing top-level key: {key!r}")


class BadCategory(ValidationError):
    def __init__(self, value: str):
        self.value = value
        super().__init__(f"not a STRIDE-LM category: {value!r}")


class BadCveFormat(ValidationError):
    def __init__(self, cve_id: str):
        self.cve_id = cve_id
        super().__init__(f"malformed CVE identifier: {cve_id!r}")


# --- scoring ---

class CvssError(ValidationError):
    pass


class UnknownMetric(CvssError):
    def __init__(self, metric: str):
        self.metric = metric
        super().__init__(f"unknown CVSS metric: {metric!r}")


class MissingMetric(CvssError):
    def __init__(self, metric: str):
        self.metric = metric
        super().__init__(f"missing CVSS metric: {metric}")


class BadValue(CvssError):
    def __init__(self, metric: str, value: str):
        self.metric = metric
        self.value = value
        super().__init__(f"bad value for CVSS metric {metric}: {value!r}")


# --- bn engine ---

class MissingParams(CpsRiskError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"no parameters supplied for node {node_id}")


class CycleAfterOrientation(CpsRiskError):
    pass


class NumericalUnderflow(CpsRiskError):
    pass


class UnknownNode(CpsRiskError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"unknown node id: {node_id}")


# --- aml ---

class AmlError(ValidationError):
    pass


class NotXml(AmlError):
    pass


class UnknownRoleClass(AmlError):
    def __init__(self, role: str):
        self.role = role
        super().__init__(f"unknown role class: {role!r}")


class DanglingLink(AmlError):
    def __init__(self, ref: str):
        self.ref = ref
        super().__init__(f"link references undeclared interface: {ref!r}")


class DuplicateId(AmlError):
    def __init__(self, element_id: str):
        self.element_id = element_id
        super().__init__(f"duplicate element id: {element_id!r}")


# --- orchestrator ---

class ProviderError(CpsRiskError):
    def __init__(self, status: int, detail: str = ""):
        self.status = status
        self.detail = detail
        super().__init__(f"provider failure (status {status}): {detail}")


class GuardrailExhausted(CpsRiskError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "retries exhausted; last violations: " + "; ".join(str(v) for v in self.violations)
        )


# --- eval harness ---

class EmptyGraph(CpsRiskError):
    pass


class UnmappedNode(CpsRiskError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"node {node_id} has no zone assignment")


class UnparseableJudgment(CpsRiskError):
    pass


class InsufficientRuns(CpsRiskError):
    pass
