"""Exception hierarchy shared by all ucnorm modules."""


class UCNormError(Exception):
    pass


class DimensionError(UCNormError, ValueError):
    """Shapes of the inputs are inconsistent."""


class ArityError(DimensionError):
    """Two tuples (or a tuple and a space) disagree on the number of variables."""


class PositivityError(UCNormError, ValueError):
    pass


class CommutativityError(UCNormError, ValueError):
    pass


class InfeasibleError(UCNormError):
    """Gram data do not define an isometry, so no colligation exists."""


class DomainError(UCNormError, ValueError):
    """Evaluation point lies outside the open unit ball where the formula is valid."""


class DuplicateNodeError(UCNormError, ValueError):
    pass


class CapacityError(UCNormError):
    pass


class UnsupportedError(UCNormError, NotImplementedError):
    pass
