"""Exception types raised across the package."""


class FingerprintError(Exception):
    """Base class for all package errors."""


class DuplicateKey(FingerprintError, ValueError):
    pass


class SchemaMismatch(FingerprintError, ValueError):
    pass


class CellTypeError(FingerprintError, TypeError):
    """A cell could not be parsed under the requested column type."""


class InvalidKey(FingerprintError, ValueError):
    pass


class InvalidParameter(FingerprintError, ValueError):
    pass


class DegenerateColumn(FingerprintError, ValueError):
    pass


class EmptyIndex(FingerprintError, ValueError):
    pass


class UniformNeighbourhood(FingerprintError):
    """Target values inside a neighbourhood have a single distinct value."""


class LengthMismatch(FingerprintError, ValueError):
    pass


class ConfigMismatch(FingerprintError, ValueError):
    pass


class EmptyResult(FingerprintError, ValueError):
    pass


class EmptyColumn(FingerprintError, ValueError):
    pass
