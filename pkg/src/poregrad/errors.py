"""Exception hierarchy and CLI exit codes."""


class PoregradError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


class ParameterError(PoregradError):
    """Invalid parameter or configuration value."""

    exit_code = 2


class DataError(PoregradError):
    """Input data violates a precondition (bad image, empty profile, ...)."""

    exit_code = 3


class GenerationError(DataError):
    """Synthetic scene generation failed (e.g. particle placement)."""


class FitError(DataError):
    """Attenuation-model fit could not be performed."""


class ProfileError(DataError):
    """Binned intensity profile could not be built."""
