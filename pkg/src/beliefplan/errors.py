"""Exception types shared across the engine."""


class BeliefPlanError(Exception):
    """Base class for all errors raised by beliefplan."""


class DomainSizeError(BeliefPlanError):
    """A product frame would exceed the configured size bound."""


class DomainMismatchError(BeliefPlanError):
    """Two values that must live on the same (or nested) domains do not."""


class ContradictionError(BeliefPlanError):
    """Evidence is fully contradictory: the whole belief mass sits on the empty set."""


class ModelError(BeliefPlanError):
    """A model document failed validation.

    ``diagnostics`` holds one human-readable message per problem found,
    each prefixed with the offending section/field.
    """

    def __init__(self, diagnostics):
        if isinstance(diagnostics, str):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


class PlanError(BeliefPlanError):
    """Planning failed at some node; carries the evidence path to that node."""

    def __init__(self, message, evidence_path=()):
        self.evidence_path = tuple(evidence_path)
        if self.evidence_path:
            trail = ", ".join(f"{t}={o}" for t, o in self.evidence_path)
            message = f"{message} (at evidence path: {trail})"
        super().__init__(message)
