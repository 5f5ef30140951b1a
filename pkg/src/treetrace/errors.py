"""Exception hierarchy shared by all treetrace modules."""


class TreeTraceError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(TreeTraceError, ValueError):
    """A parameter lies outside its admissible domain."""


class RegimeError(TreeTraceError, ValueError):
    """The gate condition ell < alpha*p < 1/ell does not hold."""


class ContinuityError(TreeTraceError, ValueError):
    """Edge samples disagree at a shared vertex."""


class SupportError(TreeTraceError, ValueError):
    """A radial profile does not match the support of a symmetry index."""


class DepthError(TreeTraceError, ValueError):
    """A requested generation exceeds the available depth."""


class AmbiguityError(TreeTraceError, ValueError):
    """A point lies on a cell boundary, so its cell is not unique."""


class ConfigError(TreeTraceError, ValueError):
    """An experiment configuration failed validation.

    The message starts with a dotted path to the offending field.
    """
