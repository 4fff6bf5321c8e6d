"""Error types shared across the HGNN packages."""


class HgnnError(Exception):
    """Base class for every error raised deliberately by this project."""


class ShapeError(HgnnError, ValueError):
    """Operand shapes are incompatible."""


class ContractError(HgnnError, ValueError):
    """A documented precondition of an operation was violated."""


class IndexRangeError(HgnnError, IndexError):
    """An index lies outside the valid range."""


class SchemaError(HgnnError, ValueError):
    """An input file does not match its documented schema."""


class DataIntegrityError(HgnnError, ValueError):
    """Input data is internally inconsistent."""


class GeneratorConfigError(HgnnError, ValueError):
    """A synthetic market configuration cannot produce usable data."""


class EmptySplitError(HgnnError, ValueError):
    """A temporal split contains no days."""


class DivergenceError(HgnnError, RuntimeError):
    """Training produced a non-finite loss."""


class NoRunsFoundError(HgnnError, FileNotFoundError):
    """A run directory holds no completed run artifacts."""
