"""Exception types raised across the package."""


class ReIDError(Exception):
    """Base class for all package errors."""


class ZeroVector(ReIDError, ValueError):
    pass


class NonFinite(ReIDError, ValueError):
    pass


class DimensionMismatch(ReIDError, ValueError):
    pass


class EmptySet(ReIDError, ValueError):
    pass


class SourceTooSmall(ReIDError, ValueError):
    pass


class WrongSize(ReIDError, ValueError):
    pass


class UnknownIdentity(ReIDError, KeyError):
    pass


class MissingTruth(ReIDError, KeyError):
    def __init__(self, frame, track):
        super().__init__(f"no truth label for frame={frame} track={track}")
        self.frame = frame
        self.track = track

    def __str__(self):
        return self.args[0]


class EmptyMatrix(ReIDError, ValueError):
    pass


class KTooLarge(ReIDError, ValueError):
    pass


class CentroidSamplingFailed(ReIDError, RuntimeError):
    pass


class ConfigError(ReIDError, ValueError):
    """Bad configuration file. ``line`` is 1-based, or None when not line-specific."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
