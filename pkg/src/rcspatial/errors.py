"""Exception hierarchy shared by every module."""


class RCSpatialError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(RCSpatialError, ValueError):
    pass


class DegenerateReservoir(RCSpatialError):
    """The unscaled recurrent matrix has spectral radius zero; reseed and retry."""


class NonFinite(RCSpatialError, ValueError):
    pass


class SingularSystem(RCSpatialError):
    pass


class CollinearRegressors(RCSpatialError):
    """The lagged VAR regressors are rank deficient (e.g. a constant series)."""


class DataError(RCSpatialError):
    """Base for problems with input data files or series coverage."""


class ParseError(DataError):
    pass


class SchemaError(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class AlignmentError(DataError):
    pass


class MisalignedSeries(DataError):
    pass


class ZeroVariance(RCSpatialError, ValueError):
    pass


class RankDeficient(RCSpatialError):
    pass


class DegenerateRange(RCSpatialError, ValueError):
    pass


class ConfigError(RCSpatialError):
    pass


class MissingSeries(DataError):
    pass
