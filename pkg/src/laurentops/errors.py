"""Exception types shared across the package."""


class LaurentOpsError(Exception):
    """Base class for all package-specific errors."""


class WindowError(LaurentOpsError):
    """A computation could not be completed inside the finite window."""


class BoundaryExitError(WindowError):
    """An orbit or operator chain left the materialized window."""


class WindowTooSmallError(WindowError):
    """The window is too small for the requested structural computation."""


class IndexRangeError(LaurentOpsError):
    """An index was outside the range permitted by the system's structure."""


class UnboundedSupportError(LaurentOpsError):
    """No finite generation range covers the given support."""


class ZeroWeightError(LaurentOpsError):
    """A weight function vanished where the construction requires it nonzero."""


class NotLeftInvertibleError(LaurentOpsError):
    """The operator fails the left-invertibility floor."""


class MismatchedSubspaceError(LaurentOpsError):
    """Two coefficient families were built over different model subspaces."""


class FormalModeError(LaurentOpsError):
    """Point evaluation requested for a model with empty convergence annulus."""


class OutsideAnnulusError(LaurentOpsError):
    """Evaluation point violates the annulus margin."""


class SingularResolventError(LaurentOpsError):
    """Resolvent evaluation attempted at or inside the spectral bound."""


class NotApplicableError(LaurentOpsError):
    """The requested check does not apply to this system."""


class ConfigError(LaurentOpsError):
    """A job configuration failed to parse or validate."""
