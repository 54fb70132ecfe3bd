"""Exception hierarchy shared by all modules."""


class HybridReachError(Exception):
    """Base class for all library errors."""


class ValidationError(HybridReachError, ValueError):
    """Input data violates a documented invariant."""


class ParseError(ValidationError):
    """Malformed input document."""


class ConfigurationError(HybridReachError, ValueError):
    """Solver or model configuration is inconsistent."""


class ControlDomainError(HybridReachError, ValueError):
    """A control, switch command or node lies outside its admissible set."""


class NotReachableError(HybridReachError):
    """Synthesis target has a positive value (not in the reachable set)."""


class ReconstructionError(HybridReachError):
    """Backward controller reconstruction could not find a feasible successor."""

    def __init__(self, stage: int, value: float) -> None:
        super().__init__(
            f"reconstruction failed at stage {stage}: best value {value:.6g} exceeds drift tolerance"
        )
        self.stage = stage
        self.value = value


class InadmissibleControlError(ControlDomainError):
    """A control sequence failed the admissibility check."""

    def __init__(self, report) -> None:
        super().__init__(f"inadmissible controller: clause {report.clause!r} at node {report.node}: {report.message}")
        self.report = report
