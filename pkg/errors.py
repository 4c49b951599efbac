"""
Error hierarchy shared by every citeforecast module.

Validation errors (bad input or configuration) exit with code 2,
computation degeneracies exit with code 3.
"""


class CiteForecastError(Exception):
    """Base class for all citeforecast errors"""

    exit_code = 1
    kind = 'error'


class ValidationError(CiteForecastError, ValueError):
    exit_code = 2
    kind = 'validation'


class CorpusFormatError(ValidationError):
    """Malformed corpus row; carries the 1-based data row number and the field"""

    def __init__(self, message, row=None, field=None):
        self.row = row
        self.field = field
        prefix = ''
        if row is not None:
            prefix = f"row {row}"
            if field:
                prefix += f", field '{field}'"
            prefix += ': '
        super().__init__(prefix + message)


class ConfigError(ValidationError):
    pass


class UnmappedSubjectCategoryError(ValidationError):
    def __init__(self, sc_ids):
        self.sc_ids = sorted(sc_ids)
        super().__init__(f"subject categories missing from area map: {', '.join(self.sc_ids)}")


class DegeneracyError(CiteForecastError, ArithmeticError):
    exit_code = 3
    kind = 'degeneracy'


class InsufficientDataError(DegeneracyError):
    pass


class RankDeficiencyError(DegeneracyError):
    def __init__(self, column, rcond):
        self.column = column
        self.rcond = rcond
        super().__init__(f"rank-deficient design: column '{column}' is collinear (rcond={rcond:.3g})")


class DegenerateResponseError(DegeneracyError):
    pass


class PerfectLeverageError(DegeneracyError):
    pass


class BaselineUnavailableError(DegeneracyError):
    def __init__(self, year, sc, t):
        self.year = year
        self.sc = sc
        self.t = t
        super().__init__(f"baseline unavailable for year={year}, sc={sc}, t={t}")


class QuantileAssignmentError(DegeneracyError):
    pass
