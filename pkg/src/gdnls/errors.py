"""Exception types raised across the package."""


class GdnlsError(Exception):
    """Base class for all package errors."""


class GridMismatchError(GdnlsError, ValueError):
    pass


class NonFiniteFieldError(GdnlsError, ValueError):
    pass


class EdgeDecayError(GdnlsError, ValueError):
    """The field is not small at the domain edges, so the torus does not stand in for the line."""


class AdmissibilityError(GdnlsError, ValueError):
    pass


class ParameterError(GdnlsError, ValueError):
    pass


class ConfigError(GdnlsError, ValueError):
    pass
