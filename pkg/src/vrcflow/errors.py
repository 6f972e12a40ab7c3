"""Exception hierarchy shared by all vrcflow modules."""


class VrcflowError(Exception):
    """Base class for all toolchain errors."""


# --- XDF parsing -------------------------------------------------------

class XmlSyntaxError(VrcflowError):
    """Input is not well-formed XML."""


class SchemaViolation(VrcflowError):
    """XML is well-formed but uses elements/attributes outside the schema."""


class SemanticError(VrcflowError):
    """Document parsed but the resulting graph violates model invariants."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


# --- merging -----------------------------------------------------------

class MergeError(VrcflowError):
    pass


class EmptyInput(MergeError):
    """merge() called with no input graphs."""


class IdentityConflict(MergeError):
    """Two actors share a name but differ in kind, params or port signature."""


class UnsupportedFanout(MergeError):
    """A producer's per-configuration consumer sets overlap without being
    equal; routing this would require token-dropping switches."""


class UnknownConfig(MergeError):
    """Configuration ID not present in the configuration table."""


# --- device ------------------------------------------------------------

class DeviceError(VrcflowError):
    pass


class OutOfRange(DeviceError):
    """Register or memory access outside the mapped window."""


class ReadOnlyRegister(DeviceError):
    """Bus write into the monitor window."""


class BadState(DeviceError):
    """Operation not permitted in the device's current state."""


class DeadlockError(DeviceError):
    """No actor can fire but outputs are incomplete."""

    def __init__(self, message, stalled_fifos=None):
        super().__init__(message)
        self.stalled_fifos = list(stalled_fifos or [])


class TimeoutError_(DeviceError):
    """Cycle budget exceeded before completion."""


class SimulationError(VrcflowError):
    """An actor raised during firing (bad token, size mismatch, ...)."""


# --- drivers -----------------------------------------------------------

class SizeMismatch(VrcflowError):
    """Driver input map does not match the descriptor's ports or regions."""


# --- monitoring --------------------------------------------------------

class MonitorError(VrcflowError):
    pass


class UnknownComponent(MonitorError):
    pass


class DuplicatePe(MonitorError):
    pass


class UnknownEvent(MonitorError):
    pass


class UnbalancedStop(MonitorError):
    """event_stop without a matching event_start on that PE."""


class UnboundPe(MonitorError):
    pass


class BaseAddressMismatch(MonitorError):
    """mdcInfo baseAddress does not match the device being attached."""


class CountMismatch(MonitorError):
    """mdcInfo nbEvents disagrees with the number of event elements."""


# --- runtime / cli -----------------------------------------------------

class Unsatisfiable(VrcflowError):
    """No mapping satisfies the given constraints."""


class ManifestError(VrcflowError):
    """Run manifest missing, unreadable or invalid."""
