"""Exception hierarchy shared by all simulator layers."""


class MotesimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(MotesimError):
    """A parameter violates its documented range or type."""


class ScenarioError(ConfigError):
    """A scenario file or preset failed validation (CLI exit code 1)."""


class TableEntryMissing(MotesimError):
    """Sensitivity table has no entry for the requested (SF, BW) pair."""


class ZeroDistanceError(MotesimError):
    """Transmitter and receiver occupy the same position."""


class IllegalTransition(MotesimError):
    """A node received an event that is not legal in its current state.

    This signals a stack bug; the simulation aborts and attaches the
    recent event trace for debugging.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace else []


class ContractViolation(MotesimError):
    """A radio driver was used outside its documented contract."""


class RadioUnavailable(MotesimError):
    """Send requested while the radio is off or not yet ready."""


class PayloadTooLarge(MotesimError):
    """Unicast payload exceeds the configured MTU."""
