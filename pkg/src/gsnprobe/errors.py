"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: usage errors -> 1, data/format
errors -> 2, backend/transport errors -> 3, oracle failures -> 4.
"""


class GsnProbeError(Exception):
    """Base class for all toolkit errors."""


class UsageError(GsnProbeError):
    """Caller violated a precondition (bad arguments, mismatched sizes)."""


class DataFormatError(GsnProbeError):
    """An input file or payload is malformed."""


class BackendError(GsnProbeError):
    """A conditional-model backend misbehaved (invalid vector, transport...)."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


class TransportError(BackendError):
    """Remote endpoint unreachable or failing after the retry budget."""

    def __init__(self, message, attempts=0):
        super().__init__(message)
        self.attempts = attempts


class ConfigurationError(BackendError):
    """Remote model info does not match the local configuration."""


class ProtocolError(BackendError):
    """Remote payload malformed or partially failed."""

    def __init__(self, message, failed_positions=()):
        super().__init__(message)
        self.failed_positions = tuple(failed_positions)


class NonConvergenceError(GsnProbeError):
    """Power iteration or TV iteration failed to converge; carries the last gap."""

    def __init__(self, message, last_gap=None):
        super().__init__(message)
        self.last_gap = last_gap


class OracleFailure(GsnProbeError):
    """An oracle verification battery reported at least one failed check."""
