"""Exception types shared by the discrepancy engines."""


class GridDiscError(ValueError):
    """Base class for all precondition failures raised by griddisc."""


class DimensionMismatchError(GridDiscError):
    def __init__(self, expected: int, got: int, what: str = "point"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} has dimension {got}, expected {expected}")


class CapExceededError(GridDiscError):
    def __init__(self, cells: int, cap: int):
        self.cells = cells
        self.cap = cap
        super().__init__(f"{cells} cells requested, cap is {cap}")


class PreconditionError(GridDiscError):
    """An operation was called outside the range where its contract applies."""


class HypothesisRefusal(GridDiscError):
    """Raised when a theorem's standing hypothesis is not met (e.g. d = 1 mod 4)."""

    def __init__(self, hypothesis: str, detail: str):
        self.hypothesis = hypothesis
        self.detail = detail
        super().__init__(f"hypothesis '{hypothesis}' violated: {detail}")
