"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end:
1 for invalid inputs, 2 for violated numerical contracts.
"""


class QRegretError(Exception):
    exit_code = 1


class ValidationError(QRegretError):
    exit_code = 1


class NumericalError(QRegretError):
    exit_code = 2


# -- linear algebra / data types
class NonHermitian(ValidationError):
    pass


class NotPsd(ValidationError):
    pass


class NonSquare(ValidationError):
    pass


class BadDims(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class InvalidPovm(ValidationError):
    pass


class DimMismatch(ValidationError):
    pass


class NotNormalized(ValidationError):
    pass


class CutoffTooSmall(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class BadCovariance(ValidationError):
    pass


class Mismatch(ValidationError):
    pass


# -- numerical contracts
class DegenerateSupport(NumericalError):
    """SLD equation has no solution: derivative has weight on the kernel of rho."""


class SingularOutcome(NumericalError):
    """An outcome with vanishing probability has a nonvanishing derivative."""


class NotDominated(NumericalError):
    """The classical FIM is not dominated by the quantum FIM."""


class FlatLikelihood(NumericalError):
    pass


# -- CLI
class SpecInvalid(ValidationError):
    pass


class ModelUnknown(ValidationError):
    pass
