"""Exception types shared across the package."""


class ArtifactError(Exception):
    """Base class for all errors raised by this package."""


class NumericFailure(ArtifactError):
    """An iterative routine hit its cap without meeting its tolerance."""


class InvalidInstance(ArtifactError):
    """Dimensions or bases do not describe a valid subspace prior."""


class DegenerateAngle(InvalidInstance):
    """A principal angle is too close to 0 or 90 degrees for the adapted basis."""


class InvalidWeights(ArtifactError):
    """Weights are not strictly positive where the derived fourth weight is needed."""


class ConfigError(ArtifactError):
    """An experiment configuration is malformed."""


class UndefinedError(ArtifactError):
    """A relative error was requested against the zero matrix."""
