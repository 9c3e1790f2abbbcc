"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: input/parameter/structural/configuration
problems exit with 2, estimation failures with 3.
"""


class TailFactorsError(Exception):
    """Base class for all errors raised by this package."""


class InputError(TailFactorsError):
    """Malformed or out-of-domain data (non-finite entries, bad CSV cells, ...)."""


class ParameterError(TailFactorsError):
    """A numeric parameter outside its documented range (e.g. k >= n)."""


class StructuralError(TailFactorsError):
    """Shape or composition mismatch (dimension conflicts, empty index sets, ...)."""


class ConfigurationError(TailFactorsError):
    """A required setting is missing for the requested operation."""


class EstimationError(TailFactorsError):
    """An estimator cannot produce a result (no pure variables, too few excesses, ...)."""
