"""Exception types shared across the toolkit.

Everything raised on purpose derives from TexdescError so callers (and the
CLI) can separate domain failures from genuine bugs.
"""


class TexdescError(Exception):
    """Base class for all toolkit errors."""


class ManifestError(TexdescError):
    """Unreadable manifest file or malformed manifest row."""


class ImageDecodeError(TexdescError):
    """Referenced image is missing or not decodable as 8-bit grayscale."""


class ConfigError(TexdescError):
    """Invalid or inconsistent configuration for an operation."""


class StatsError(TexdescError):
    """A class lacks the samples needed for the requested statistic."""


class SelectionError(TexdescError):
    """Feature-subset search cannot run on the given inputs."""


class TrainingError(TexdescError):
    """Classifier training preconditions violated."""


class BundleFormatError(TexdescError):
    """Corrupt or truncated bundle container."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BundleVersionError(TexdescError):
    """Bundle written by an unsupported format version."""
