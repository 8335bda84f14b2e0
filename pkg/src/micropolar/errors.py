"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Mismatched grids, malformed configs, missing constants."""


class PreconditionError(ValueError):
    """A documented operation precondition was violated (e.g. non-solenoidal data)."""


class SingularOperatorError(ValueError):
    """Negative fractional power requested on a field with a nonzero mean mode."""


class CheckpointError(IOError):
    """Unreadable, truncated, or version/hash-mismatched checkpoint file."""
