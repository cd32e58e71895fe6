"""Exception types shared across the package.

The CLI maps these onto exit codes: usage-type errors exit 2, budget
overruns exit 3, failed checks exit 4.
"""


class ReconError(Exception):
    """Base class for every error raised by recongnn."""


class InvalidArgument(ReconError, ValueError):
    pass


class UnsupportedSize(ReconError, ValueError):
    """Input is larger than a documented size cap."""


class ResourceError(ReconError):
    """An enumeration budget would be exceeded.

    ``knob`` names the parameter the caller can raise (or the sampled
    alternative to switch to).
    """

    def __init__(self, message: str, knob: str | None = None):
        super().__init__(message)
        self.knob = knob


class CorruptedDeck(ReconError):
    pass


class GenerationError(ReconError):
    pass


class InvalidDataset(ReconError, ValueError):
    pass


class ShapeError(ReconError, ValueError):
    pass


class TrainingError(ReconError):
    """Raised when training diverges; ``diagnostics`` holds the last metrics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(ReconError, ValueError):
    pass
