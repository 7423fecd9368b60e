"""Error types for artifact files (codebooks, receiver weights)."""


class ArtifactError(Exception):
    """Base class for artifact load/validation failures."""


class ArtifactFormatError(ArtifactError):
    """Bad magic, unsupported version, or malformed header."""


class ArtifactShapeError(ArtifactError):
    """Declared shape inconsistent with payload (e.g. truncated file)."""


class ArtifactInvariantError(ArtifactError):
    """Contents violate a semantic invariant (e.g. codeword energy)."""
