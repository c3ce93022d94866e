class LabError(Exception):
    """Base class for errors raised by the training laboratory."""


class ContractViolation(LabError, ValueError):
    """
    Raised when a caller breaks an operation's precondition.
    Examples are mismatched array shapes, a sparsity count larger than the
    matrix width, or a perturbation plan sampled for another sequence
    length.
    """


class DataError(LabError, ValueError):
    """Raised for malformed datasets, non-binary frames or empty test sets."""


class DivergenceError(LabError, ArithmeticError):
    """Raised when a loss, gradient or parameter stops being finite."""


class SchemaError(LabError, ValueError):
    """
    Raised when a run configuration fails validation.
    Attributes:
        keys (list[str]): Dotted paths of the offending configuration keys.
    """

    def __init__(self, message: str, keys: list[str] | None = None):
        super().__init__(message)
        self.keys = keys or []
