"""Exception types shared across the package."""


class CollabSimError(Exception):
    """Base class for all errors raised by collabsim."""


class DimensionError(CollabSimError, ValueError):
    """Array shapes disagree or an index falls outside the grid."""


class ConfigError(CollabSimError, ValueError):
    """A configuration value is missing or violates its constraints."""


class ProtocolError(CollabSimError, RuntimeError):
    """An operation was invoked out of protocol order."""


class WireError(CollabSimError, ValueError):
    """Malformed message bytes.

    ``position`` is the byte offset at which decoding or encoding failed.
    """

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at byte {position})"
        super().__init__(message)
        self.position = position
