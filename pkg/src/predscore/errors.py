"""Exception hierarchy. ``exit_code`` is what the CLI returns for each class."""


class PredscoreError(Exception):
    exit_code = 1


class DataError(PredscoreError, ValueError):
    """Input violates a data contract (bad file, bad labels, bad folds)."""

    exit_code = 3


class ParseError(DataError):
    pass


class BaselineRateError(DataError):
    """Precision-recall scoring requested on datasets with mismatched rates."""


class NumericalError(PredscoreError, ArithmeticError):
    """A fit or resampling step could not produce a usable result."""

    exit_code = 4


class ConvergenceError(NumericalError):
    pass
