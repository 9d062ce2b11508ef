"""Error taxonomy.

Every library error derives from :class:`CtisError` and carries a short
``category`` string; the CLI prints it as ``error:<category>: <message>``.
"""

from __future__ import annotations


class CtisError(Exception):
    category = "ctis"


class DimensionError(CtisError, ValueError):
    category = "dimension"


class MetadataError(CtisError, ValueError):
    category = "metadata"


class NegativeDataError(CtisError, ValueError):
    category = "negative-data"

    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index


class NegativeImageError(NegativeDataError):
    category = "negative-image"


class NonFiniteError(CtisError, ValueError):
    category = "non-finite"

    def __init__(self, message: str, index: int | None = None) -> None:
        super().__init__(message)
        self.index = index


class CountMismatch(CtisError, ValueError):
    category = "count-mismatch"


class ZeroColumnError(CtisError, ValueError):
    category = "zero-column"


class SpotOutOfBounds(CtisError, ValueError):
    category = "spot-out-of-bounds"


class BandMismatch(CtisError, ValueError):
    category = "band-mismatch"


class GeometryMismatch(CtisError, ValueError):
    category = "geometry-mismatch"


class ZeroReferenceError(CtisError, ValueError):
    category = "zero-reference"


class AllPixelsExcluded(CtisError, ValueError):
    category = "all-pixels-excluded"


class SizeCapExceeded(CtisError):
    category = "size-cap"


class FormatVersionError(CtisError):
    category = "format-version"


class ChecksumError(CtisError):
    category = "checksum"


class ConfigError(CtisError, ValueError):
    category = "config"
