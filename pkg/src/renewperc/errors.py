"""Exception types shared across the package."""


class RenewpercError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(RenewpercError, ValueError):
    """Inputs or configuration violate a documented contract."""


class InfiniteMeanError(RenewpercError):
    """The renewal law shows no evidence of a finite mean inter-arrival time."""


class UnboundedRadiusError(RenewpercError):
    """An operation requiring bounded radius support received an unbounded model."""


class MonotonicityError(RenewpercError):
    """A monotone-only bound was requested for a non-monotone mark law."""


class EnumerationCapError(RenewpercError):
    """Exhaustive enumeration would exceed the configured term cap."""


class InternalConsistencyError(RenewpercError):
    """Two redundant computations of the same quantity disagree."""
