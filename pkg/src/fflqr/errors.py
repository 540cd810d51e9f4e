"""Exception types and warning categories shared across the package."""


class FflqrError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FflqrError):
    """Invalid configuration value or inconsistent option combination."""


class DataError(FflqrError):
    """Malformed or incompatible input data (CSV parsing, grid mismatches)."""


class NumericalError(FflqrError):
    """A numerical routine failed to converge or a factorization broke down."""


class RankDeficiencyWarning(UserWarning):
    """Design matrix columns were linearly dependent; some coefficients were zeroed."""
