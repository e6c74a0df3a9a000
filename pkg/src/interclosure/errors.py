"""Exception hierarchy.

Every error raised by the library derives from :class:`UniverseError`.
Input-validation errors additionally derive from :class:`ValueError` so that
callers which only know about builtin exceptions still catch them.
"""


class UniverseError(Exception):
    """Base class for all library errors."""


class InputError(UniverseError, ValueError):
    """Raised when user-supplied data is malformed."""


class NonSquare(InputError):
    pass


class NegativeEntry(InputError):
    def __init__(self, row, column, value):
        self.row, self.column, self.value = row, column, value
        super().__init__(f"negative entry {value!r} at (x'={row}, x={column})")


class ColumnSumViolation(InputError):
    def __init__(self, column, total):
        self.column, self.total = column, total
        super().__init__(f"ColumnSumViolation: column {column} sums to {float(total):.12g}")


class NonUniqueStationary(InputError):
    def __init__(self, classes):
        self.classes = classes
        super().__init__(
            f"NonUniqueStationary: {len(classes)} closed recurrent classes {classes}"
        )


class NumericalFailure(UniverseError):
    pass


class DimensionMismatch(InputError):
    pass


class UnknownVariable(InputError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class MissingVariable(UnknownVariable):
    pass


class OverlappingVariables(InputError):
    pass


class OutOfRangeValue(InputError):
    pass


class NotDeterministic(UniverseError):
    def __init__(self, state, vector):
        self.state, self.vector = state, vector
        super().__init__(f"conditional at state {state} is not a delta: {list(vector)}")


class StateSpaceMismatch(InputError):
    pass


class InfeasibleStructure(InputError):
    pass


class ReducibleAfterRetries(UniverseError):
    def __init__(self, attempts, reason=""):
        self.attempts = attempts
        msg = f"chain still reducible after {attempts} attempt(s)"
        super().__init__(f"{msg}: {reason}" if reason else msg)


class ClosureVerificationFailed(UniverseError):
    pass


class PreconditionNotMet(UniverseError):
    pass


class AssumptionViolated(UniverseError):
    """An assumption of the extreme-point argument does not hold.

    ``bullet`` names the violated assumption, ``payload`` holds the
    counterexample (universe document plus offending states).
    """

    def __init__(self, bullet, detail, payload=None):
        self.bullet, self.detail, self.payload = bullet, detail, payload
        super().__init__(f"assumption '{bullet}' violated: {detail}")


class MapRecoveryFailed(UniverseError):
    pass


class TooShort(InputError):
    pass
