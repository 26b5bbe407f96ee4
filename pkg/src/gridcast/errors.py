"""Exception types raised across gridcast."""


class GridcastError(Exception):
    """Base class for every error raised by this package."""


class InputError(GridcastError, ValueError):
    """Bad user-supplied data. The CLI maps these to exit code 2."""


class MissingColumn(InputError):
    def __init__(self, column, path=None):
        self.column = column
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"missing column {column!r}{where}")


class UnparsableValue(InputError):
    def __init__(self, row, column, value, path=None):
        self.row = row
        self.column = column
        self.value = value
        where = f"{path}: " if path else ""
        super().__init__(f"{where}row {row}: cannot parse {column}={value!r}")


class EmptyFile(InputError):
    pass


class DuplicateDate(InputError):
    pass


class NegativeCount(InputError):
    pass


class EmptyIntersection(InputError):
    pass


class BadFractions(InputError):
    pass


class DatasetTooSmall(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class RankDeficient(GridcastError):
    pass


class NonConvergence(GridcastError):
    """No start of the exponential solver met the gradient tolerance.

    ``best`` holds the lowest-SSE iterate reached, so callers may inspect
    it, but it must not be used as a fitted model.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SingularSystem(GridcastError):
    pass


class MissingCatalogEntry(GridcastError, KeyError):
    pass
