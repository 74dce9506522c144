"""Exception hierarchy shared by every module.

Each class doubles as a builtin (``ValueError``, ``RuntimeError``...) so callers
that only know the standard exceptions still catch them.
"""


class QnnHaeError(Exception):
    """Base class for all package errors."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "type": type(self).__name__, "message": str(self)}


class ShapeError(QnnHaeError, ValueError):
    code = "shape"


class RangeError(QnnHaeError, ValueError):
    code = "range"


class ConfigurationError(QnnHaeError, ValueError):
    code = "configuration"


class StateError(QnnHaeError, RuntimeError):
    code = "state"


class NumericOverflowError(QnnHaeError, FloatingPointError):
    code = "numeric_overflow"

    def __init__(self, message, layer_index=None):
        super().__init__(message)
        self.layer_index = layer_index


class DivergenceError(QnnHaeError, FloatingPointError):
    code = "divergence"

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class DataError(QnnHaeError, ValueError):
    code = "data"


class LoadError(DataError):
    code = "load"


class MissingFileError(LoadError, FileNotFoundError):
    code = "missing_file"


class NonNumericCellError(LoadError):
    code = "non_numeric_cell"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class MissingLabelColumnError(LoadError, KeyError):
    code = "missing_label_column"

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class UndefinedMetricError(QnnHaeError, ValueError):
    code = "undefined_metric"


class SamplerStallError(QnnHaeError, RuntimeError):
    code = "sampler_stall"


class FitError(QnnHaeError, RuntimeError):
    code = "fit"
