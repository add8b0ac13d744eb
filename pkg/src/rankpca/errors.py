"""Exception hierarchy shared across the package.

Every numerical failure raises a subclass of :class:`RankPCAError` so the
CLI can map library errors to a single exit code while still reporting the
specific failure by name.
"""


class RankPCAError(Exception):
    """Base class for all errors raised by this package."""


class InvalidData(RankPCAError):
    """Input data violates a precondition (non-finite entries, bad shape)."""


class DegenerateColumn(RankPCAError):
    """A data column is constant, so rank/scale statistics are undefined."""

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        super().__init__(message or f"column {column} is constant")


class InvalidDimension(RankPCAError):
    """Requested dimensions are incompatible (e.g. d < 2s in the synthetic model)."""


class InvalidRadius(RankPCAError):
    """Sparsity radius/budget outside the solvable range."""


class InvalidVector(RankPCAError):
    """A vector argument violates its contract (e.g. not unit norm)."""


class InvalidInput(RankPCAError):
    """Generic invalid argument for an operation."""


class DegenerateIterate(RankPCAError):
    """An iterative solver produced a zero iterate (matrix-vector product in the null space)."""


class AllZeroSolution(RankPCAError):
    """The l1 penalty shrank every coordinate to zero; reduce the penalty."""


class NumericalError(RankPCAError):
    """A numerical routine (eigendecomposition, factorization) failed."""


class NotPsd(RankPCAError):
    """A matrix required to be positive semidefinite is not."""


class NotConverged(RankPCAError):
    """An iterative procedure exhausted its budget before meeting its tolerance.

    Carries the best iterate found so far in ``result`` so callers can
    decide whether to use it anyway.
    """

    def __init__(self, message: str, result=None):
        self.result = result
        super().__init__(message)


class ConfigError(RankPCAError):
    """Invalid configuration; ``fields`` maps field names to diagnostics."""

    def __init__(self, fields: dict[str, str]):
        self.fields = dict(fields)
        detail = "; ".join(f"{k}: {v}" for k, v in self.fields.items())
        super().__init__(f"invalid configuration: {detail}")
