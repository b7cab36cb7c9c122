"""Exception hierarchy shared by every module of the package."""


class StegoError(Exception):
    """Base class for all package errors."""


class DomainError(StegoError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConversionError(StegoError):
    """LPC to LSP conversion could not locate all ten roots."""


class ConfigurationError(StegoError):
    """Inconsistent codebook or quantizer configuration."""


class CapacityError(StegoError):
    """The payload does not fit into the cover."""

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


class IntegrityError(StegoError):
    """Extracted framing is inconsistent (wrong key or damaged stream)."""


class TruncationError(IntegrityError):
    """The index stream ends before the declared payload length."""


class FormatError(StegoError):
    """Base class for container format problems."""


class WavError(FormatError):
    pass


class WavParseError(WavError):
    """Malformed RIFF/WAVE structure."""


class UnsupportedWavError(WavError):
    """Well-formed WAV whose parameters are not 8 kHz / mono / 16-bit PCM."""

    def __init__(self, parameter, value, expected):
        super().__init__(f"unsupported {parameter}: {value} (expected {expected})")
        self.parameter = parameter
        self.value = value


class MatrixFormatError(FormatError):
    """Invalid M3DM matrix file."""


class CodebookFormatError(FormatError):
    """Invalid LSPC codebook file."""


class IndexStreamFormatError(FormatError):
    """Invalid LSPI index stream file."""
