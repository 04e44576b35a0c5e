"""Exception hierarchy shared by the library and the command line driver."""


class RhoBaskakovError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(RhoBaskakovError, ValueError):
    """Bad arguments: out-of-range orders, empty grids, unknown labels."""


class DomainError(UsageError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(RhoBaskakovError, ArithmeticError):
    """A computation produced non-finite values or failed to converge."""


class TruncationError(NumericError):
    """A weight series needed more terms than the policy allows.

    Attributes:
        collected_mass: weight mass gathered before giving up.
        k_max: the cap that was hit.
    """

    def __init__(self, message, collected_mass, k_max):
        super().__init__(message)
        self.collected_mass = collected_mass
        self.k_max = k_max


class ContractError(RhoBaskakovError):
    """A caller-declared property (e.g. a growth constant) failed a spot check."""


class BoundViolation(RhoBaskakovError):
    """A measured quantity exceeded a bound that must always hold (a regression)."""
