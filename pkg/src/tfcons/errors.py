"""Exception types shared across the package."""


class TfconsError(Exception):
    """Base class for processing errors raised by this package."""


class DimensionError(TfconsError, ValueError):
    pass


class WavFormatError(TfconsError, ValueError):
    """Malformed RIFF/WAVE header or payload."""


class UnsupportedFormatError(TfconsError, ValueError):
    """A well-formed file using a codec or sample width we do not read."""


class SampleRateError(TfconsError, ValueError):
    pass


class NonInvertibleConfigError(TfconsError, ValueError):
    """The synthesis window sum vanishes somewhere inside the signal."""


class NumericError(TfconsError, ArithmeticError):
    pass


class DegenerateMeasureError(TfconsError, ValueError):
    """Every consistency value in a set was degenerate."""


class SpecFormatError(TfconsError, ValueError):
    """Malformed SPEC1 spectrogram container."""
