"""
TriMorph v2026 - Error Hierarchy
"""

from typing import Any, Optional


class TriMorphError(Exception):
    """Base class for every error raised by TriMorph."""


class InvalidInputError(TriMorphError, ValueError):
    """Input failed validation (dimension mismatch, out-of-range value, bad index)."""


class TensorFormatError(InvalidInputError):
    """NTC1 magic or header is malformed."""


class TensorCorruptionError(TensorFormatError):
    """NTC1 payload length disagrees with the declared shape."""


class UnsupportedGeometryError(InvalidInputError):
    """Mesh uses records outside the supported OBJ subset."""


class DegenerateInputError(InvalidInputError):
    """A zero-norm vector reached an operation that needs a direction."""


class ConfigurationError(InvalidInputError):
    """Pipeline configuration is inconsistent."""


class EmbeddingLookupError(TriMorphError, LookupError):
    """Sample id not present in an embedding set."""


class NumericFailure(TriMorphError, ArithmeticError):
    """A loss or estimate became non-finite."""

    def __init__(self, message: str, diagnostics: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
