class SpecError(ValueError):
    """A job parameter bundle violates the model's constraints."""


class NonIntegerPK(SpecError):
    pass


class NonIntegerRK(SpecError):
    pass


class RExceedsP(SpecError):
    pass


class QNotDivisibleByK(SpecError):
    pass


class ShapeError(ValueError):
    """An assignment strategy cannot be applied to the given spec."""


class NaiveShapeError(ShapeError):
    pass


class WrongAssignment(ValueError):
    pass


class BadSetSize(ValueError):
    pass


class NegativeTime(ValueError):
    pass


class QuadratureFailure(RuntimeError):
    pass


class DegenerateBound(ZeroDivisionError):
    """The lower bound is zero, so the gap ratio is 0/0 or x/0."""


class TooLarge(ValueError):
    pass


class DecodeFailure(RuntimeError):
    def __init__(self, server, q, n, reason="unrecoverable"):
        self.server = server
        self.q = q
        self.n = n
        super().__init__(f"server {server} cannot recover v[{q},{n}]: {reason}")
