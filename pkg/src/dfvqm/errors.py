"""Exception hierarchy shared across the toolkit."""


class DfvqmError(Exception):
    """Base class for all toolkit errors (maps to CLI exit code 2)."""


class FormatError(DfvqmError):
    """Malformed or unsupported bitstream/file content."""


class GeometryError(DfvqmError):
    """Frame/sequence geometry mismatch or invalid dimensions."""


class AlignmentError(DfvqmError):
    """Invalid input to the dropped-frame identification pipeline."""


class PlanError(DfvqmError):
    """A drop plan cannot be constructed for the requested parameters."""


class CorrelationError(DfvqmError):
    """Correlation is undefined for the given inputs."""
