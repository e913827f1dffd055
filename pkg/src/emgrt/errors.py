"""Exception hierarchy shared across the pipeline.

Two broad families matter to callers: configuration problems (bad paths,
bad parameter values, malformed manifests) and runtime problems (bad data,
diverging training, unsupported signal lengths). The CLI maps them to
distinct exit codes and the HTTP layer to distinct error categories.
"""


class EmgrtError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EmgrtError):
    """Invalid configuration: bad paths, parameter values, or manifest syntax."""


class DataFormatError(EmgrtError):
    """Malformed recording data (bad token, column mismatch, stream underrun)."""


class WindowingError(EmgrtError):
    """Signal cannot be segmented as requested (e.g. shorter than one window)."""


class DwtError(EmgrtError):
    """Wavelet decomposition precondition violated (length divisibility)."""


class FeatureError(EmgrtError):
    """Feature cannot be computed (sequence too short, non-finite result)."""


class TrainingError(EmgrtError):
    """Training failed at runtime (e.g. loss diverged to a non-finite value)."""


class UnsupportedLengthError(EmgrtError):
    """Signal too short for the requested decision mode.

    Sequential-input stacks need five windows (300 ms at the default
    100/50 ms windowing); shorter signals cannot produce a decision.
    """


class ModelFormatError(EmgrtError):
    """Model file is missing, corrupt, or has an unsupported version."""
