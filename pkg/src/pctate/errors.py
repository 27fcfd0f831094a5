"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`PctAteError`.
The two intermediate classes decide the CLI exit code: input/config problems
exit with 2, numerical failures with 3.
"""


class PctAteError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class InputError(PctAteError, ValueError):
    exit_code = 2


class NumericalError(PctAteError, ArithmeticError):
    exit_code = 3


class ParseError(InputError):
    pass


class SchemaError(InputError):
    pass


class EmptyInput(InputError):
    pass


class DimensionError(InputError):
    pass


class InvalidShare(InputError):
    pass


class InvalidCovariance(InputError):
    pass


class MissingGroup(InputError):
    def __init__(self, groups, message=None):
        self.groups = list(groups)
        if message is None:
            message = "no observations for group(s): " + ", ".join(map(str, self.groups))
        super().__init__(message)


class NonPositiveOutcome(InputError):
    def __init__(self, rows):
        self.rows = list(rows)
        shown = ", ".join(str(r) for r in self.rows[:20])
        more = "" if len(self.rows) <= 20 else f" (+{len(self.rows) - 20} more)"
        super().__init__(f"outcome must be strictly positive; offending rows: {shown}{more}")


class NoControlGroup(InputError):
    pass


class EmptyTreatment(InputError):
    pass


class EmptyAggregation(InputError):
    pass


class DegenerateClusters(InputError):
    pass


class SingularDesign(NumericalError):
    def __init__(self, columns, message=None):
        self.columns = list(columns)
        if message is None:
            message = "design matrix is rank deficient; collinear column(s): " + ", ".join(
                map(str, self.columns)
            )
        super().__init__(message)


class ConvergenceError(NumericalError):
    pass


class DegenerateInference(NumericalError):
    pass


class NumericalWarning(UserWarning):
    """Issued when a quantity is clamped to keep results defined."""
