"""Exception types raised across the package."""
from __future__ import annotations


class BootLassoError(Exception):
    """Base class for all errors raised by bootlasso."""


class MalformedInput(BootLassoError, ValueError):
    """Input data could not be parsed or contains invalid values."""


class DegenerateData(BootLassoError, ValueError):
    """Input parsed fine but cannot support a fit (e.g. zero variance)."""


class NonFiniteInput(MalformedInput):
    def __init__(self, row: int, col: int | str):
        self.row = row
        self.col = col
        super().__init__(f"non-finite value at row {row}, column {col}")


class ConstantColumn(DegenerateData):
    def __init__(self, col: int | str):
        self.col = col
        super().__init__(f"column {col} is constant and cannot be standardized")


class NoPositiveWeight(BootLassoError, ValueError):
    def __init__(self):
        super().__init__("weight vector has no positive entry")


class DidNotConverge(BootLassoError, RuntimeError):
    """Coordinate descent hit its sweep budget.

    Loosen the tolerance, raise ``max_sweeps`` or shorten the lambda grid.
    """

    def __init__(self, max_sweeps: int, lambda_index: int | None = None,
                 replicate_id: int | None = None):
        self.max_sweeps = max_sweeps
        self.lambda_index = lambda_index
        self.replicate_id = replicate_id
        where = []
        if lambda_index is not None:
            where.append(f"lambda index {lambda_index}")
        if replicate_id is not None:
            where.append(f"replicate {replicate_id}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"coordinate descent did not converge in {max_sweeps} sweeps{suffix}")


class IndexOutOfRange(BootLassoError, IndexError):
    pass


class InvalidScheme(BootLassoError, ValueError):
    """Bad weight-scheme parameters (shape, fold count, m)."""


class InvalidShape(InvalidScheme):
    pass


class InvalidFoldCount(InvalidScheme):
    pass


class InvalidM(InvalidScheme):
    pass


class EmptyInput(BootLassoError, ValueError):
    pass


class AllReplicatesDegenerate(DegenerateData):
    def __init__(self, b: int):
        self.b = b
        super().__init__(f"all {b} bootstrap replicates were degenerate")


class FoldTooSmall(BootLassoError, ValueError):
    pass


class DegenerateTruth(BootLassoError, ValueError):
    pass


class ConfigError(BootLassoError, ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
