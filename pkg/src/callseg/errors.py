"""Exception types shared across the package.

Everything raised on purpose derives from CallsegError, so callers (and the
CLI) can distinguish bad input from genuine bugs.
"""


class CallsegError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CallsegError):
    """File is not a readable single-channel PCM WAV / well-formed input file."""


class ChannelCountError(FormatError):
    """Audio file has more than one channel."""


class SampleRateError(FormatError):
    """Audio file's declared sample rate differs from the expected rate."""


class TooShortError(CallsegError):
    """Signal shorter than one analysis window."""


class ConfigError(CallsegError):
    """Invalid configuration value or combination."""


class ShapeError(CallsegError):
    """Array shape does not match what the operation requires."""


class NumericError(CallsegError):
    """Non-finite values where finite ones are required."""


class LabelError(CallsegError):
    """Class label outside the valid range."""


class StateError(CallsegError):
    """Operation called in the wrong order (e.g. backward before forward)."""


class PrecisionError(CallsegError):
    """Operation requires 64-bit mode."""


class CheckpointError(CallsegError):
    """Checkpoint file is missing, truncated, corrupt or version-incompatible."""


class LayoutError(CallsegError):
    """Corpus tree contains a path that does not follow the folder template."""


class DataError(CallsegError):
    """Corpus split is empty or otherwise unusable."""


class DivergenceError(CallsegError):
    """Training loss became non-finite."""


class SplitLeakError(CallsegError):
    """A speaker was assigned to more than one split."""


class InputError(CallsegError):
    """Mismatched or out-of-range inputs to a metric/aggregation routine."""


class DbasRejection(CallsegError):
    """A call was rejected by the annotation scheme; .reason says why."""

    reason = "rejected"


class NoSpeechError(DbasRejection):
    """Call (or stream request) contains no speech segments at all."""

    reason = "no_speech"


class SingleGenderError(DbasRejection):
    """Call contains speech of only one gender, so roles cannot be assigned."""

    reason = "single_gender"


class NoWindowsError(CallsegError):
    """Speaker stream is shorter than one classification window."""
