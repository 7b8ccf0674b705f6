"""Exception hierarchy.

Every error raised by the package derives from :class:`Hetero2STError` and,
where it makes sense, also from the matching builtin (``ValueError``) so that
callers who do not care about the distinction can catch the usual types.
"""


class Hetero2STError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(Hetero2STError, ValueError):
    pass


class NonFiniteInput(Hetero2STError, ValueError):
    pass


class GraphTooSmall(Hetero2STError, ValueError):
    pass


class DisconnectedAfterExclusion(Hetero2STError, RuntimeError):
    """The complete graph ran out of edges before ``ell`` disjoint trees were found."""


class SingleSample(Hetero2STError, ValueError):
    pass


class SingularCovariance(Hetero2STError, ValueError):
    pass


class EnumerationTooLarge(Hetero2STError, ValueError):
    pass


class InsufficientDraws(Hetero2STError, ValueError):
    pass


class TooFewPoints(Hetero2STError, ValueError):
    pass


class EmptyClusterUnrecoverable(Hetero2STError, RuntimeError):
    pass


class TooManyInfeasibleRounds(Hetero2STError, RuntimeError):
    """Too few bootstrap rounds could be drawn; usually ``m`` is too large
    relative to the smallest estimated cluster."""


class QuadratureNonconvergent(Hetero2STError, RuntimeError):
    pass


class InvalidSpec(Hetero2STError, ValueError):
    pass


class NotPositiveDefinite(InvalidSpec):
    pass


class UnknownExperiment(Hetero2STError, KeyError):
    pass


class EmptySelection(Hetero2STError, ValueError):
    pass
