"""Exception hierarchy shared by all modules.

Each exception carries the process exit code the command line frontend
uses when it surfaces the error.
"""


class LyricsyncError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 3


class ConfigError(LyricsyncError):
    exit_code = 2


# lexicon
class EmptyLyrics(LyricsyncError):
    pass


class UnmappablePhoneme(LyricsyncError):
    pass


# gram file format
class BadMagic(LyricsyncError):
    pass


class ShapeMismatch(LyricsyncError):
    pass


class UnsupportedVersion(LyricsyncError):
    pass


# loss / align
class InfeasibleLength(LyricsyncError):
    exit_code = 4


class LengthMismatch(LyricsyncError):
    pass


class AllMasked(LyricsyncError):
    pass


# metrics
class EmptyInput(LyricsyncError):
    pass


class DegenerateLabels(LyricsyncError):
    pass


# synth
class InfeasibleSpec(LyricsyncError):
    exit_code = 4


class TooLarge(LyricsyncError):
    pass


class SchemaError(LyricsyncError):
    """Input JSON does not follow the documented schema."""
