"""Exception hierarchy.

Domain errors are caused by the inputs (invalid parameters, thresholds not
met, degenerate populations). Numerical errors come from the solvers.
"""


class PcpHivError(Exception):
    """Base class for all package errors."""


class DomainError(PcpHivError):
    pass


class InvalidParameterError(DomainError, ValueError):
    pass


class DegeneratePopulationError(DomainError):
    """Total population is zero where a force of infection is needed."""


class VariantMismatchError(DomainError):
    """A compartment that is inactive for the variant holds a nonzero value."""


class ThresholdError(DomainError):
    """A closed form was requested on the wrong side of its R0 threshold."""


class NumericalError(PcpHivError):
    pass


class SingularMatrixError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class IntegrationError(NumericalError):
    pass


class StepLimitError(IntegrationError):
    pass


class StepUnderflowError(IntegrationError):
    pass


class InvariantBreachError(IntegrationError):
    def __init__(self, message, t=None, compartment=None, value=None):
        super().__init__(message)
        self.t = t
        self.compartment = compartment
        self.value = value


class NonSettlementError(NumericalError):
    def __init__(self, message, state=None, residual=None):
        super().__init__(message)
        self.state = state
        self.residual = residual


class NegativeComponentError(NumericalError):
    def __init__(self, message, compartment=None, value=None):
        super().__init__(message)
        self.compartment = compartment
        self.value = value
