"""Exception hierarchy shared by all modules."""


class DilationError(Exception):
    """Base class for every error raised by this package."""


class NegativeEntry(DilationError, ValueError):
    def __init__(self, row: int, col: int, value: float):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"negative entry {value!r} at ({row}, {col})")


class RowSumDeviation(DilationError, ValueError):
    def __init__(self, row: int, deviation: float):
        self.row, self.deviation = row, deviation
        super().__init__(f"row {row} sums to 1 + {deviation:.3e}")


class HorizonExceeded(DilationError, ValueError):
    pass


class LabelOutOfRange(DilationError, ValueError):
    pass


class LabelSpaceTooLarge(DilationError, ValueError):
    pass


class NonConvergence(DilationError, RuntimeError):
    pass


class LabelNotInAlphabet(DilationError, KeyError):
    pass


class CompletionImpossible(DilationError, RuntimeError):
    pass


class WindowUnderflow(DilationError, IndexError):
    def __init__(self, coordinate: int, lo: int, hi: int):
        self.coordinate = coordinate
        super().__init__(
            f"coordinate {coordinate} is not materialized (window [{lo}, {hi}])")


class EnumerationTooLarge(DilationError, ValueError):
    pass


class DimMismatch(DilationError, ValueError):
    pass


class DimensionTooLarge(DilationError, ValueError):
    pass


class WindowTooLarge(DilationError, ValueError):
    pass


class UnitalityViolation(DilationError, ValueError):
    pass


class NotAPermutation(DilationError, ValueError):
    pass


class BadInput(DilationError, ValueError):
    pass
