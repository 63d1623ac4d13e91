"""Exception hierarchy. CLI exit codes hang off these classes."""


class SpikeBasisError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class SingularBasis(SpikeBasisError, ValueError):
    """Matrix fails the scale-aware invertibility test."""


class SingularMinor(SpikeBasisError, ValueError):
    """A cofactor vanishes, so ``det(B) / cofactor`` is undefined."""


class DegenerateParameters(SpikeBasisError, ValueError):
    pass


class NotOrthonormal(SpikeBasisError, ValueError):
    pass


class NotVolumePreserving(SpikeBasisError, ValueError):
    pass


class AtomicMarginal(SpikeBasisError, ValueError):
    """A marginal carries a point mass at 0; it has no density or differential entropy."""

    exit_code = 2


class UnsupportedSearch(SpikeBasisError, ValueError):
    """Cost/dictionary combination the optimizer cannot handle."""

    exit_code = 2


class NoMinimumExists(SpikeBasisError):
    """The requested optimum provably does not exist."""

    exit_code = 3


class VerificationFailed(SpikeBasisError):
    """At least one theorem check failed."""

    exit_code = 4
