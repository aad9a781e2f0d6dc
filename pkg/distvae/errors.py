class DistVAEError(Exception):
    """Base class for every error raised by the distvae package."""


class SchemaError(DistVAEError):
    pass


class DataError(DistVAEError):
    """Bad input data; messages name the offending row and/or column."""


class ShapeError(DistVAEError):
    pass


class NonFiniteError(DistVAEError):
    """A loss or gradient became NaN/inf."""


class ConfigError(DistVAEError):
    pass


class CheckpointError(DistVAEError):
    pass


class MetricError(DistVAEError):
    pass
