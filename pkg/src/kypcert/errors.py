"""Exception hierarchy for kypcert."""


class KypError(Exception):
    """Base class for all kypcert errors."""


class NonSquare(KypError):
    """A state operator that must be square is not."""


class NoDichotomy(KypError):
    """The state operator has spectrum on (or too close to) the unit circle."""


class SylvesterFailure(KypError):
    """The block-decoupling Sylvester solve is too ill-conditioned to trust."""


class SingularAminus(KypError):
    """The anticausal state operator is not invertible at the requested tolerance."""


class NonPositiveEpsilon(KypError):
    """The augmentation parameter must be strictly positive."""


class PoleProximity(KypError):
    """Transfer-function evaluation requested too close to a pole."""


class WindowTooSmall(KypError):
    """A trajectory window does not contain the state decay at tolerance."""


class StateMismatch(KypError):
    """Trajectory patching requires matching states at the seam."""


class NotExactlyControllable(KypError):
    """A truncated controllability operator is not surjective at tolerance."""


class NotExactlyMinimal(KypError):
    """Exact controllability or observability fails at tolerance."""


class NotSelfadjoint(KypError):
    """A matrix that must be selfadjoint is not."""


class NotContractive(KypError):
    """An operator that must be contractive has norm above 1 at tolerance."""


class RangeViolation(KypError):
    """A Douglas factorization residual exceeds its tolerance."""


class NotStrictlyContractive(KypError):
    """A pipeline that needs strict contractivity found norm >= 1 - tol."""


class DocumentError(KypError):
    """A system document failed validation before reaching the numeric core."""
