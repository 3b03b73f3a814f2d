"""Typed error hierarchy shared across the package.

Every malformed input maps to one of these; nothing here is ever allowed
to escape as a bare ValueError from the public API.
"""


class CastIdError(Exception):
    """Base class for all package errors."""


# --- ingest ---------------------------------------------------------------

class MissingFile(CastIdError):
    pass


class DimMismatch(CastIdError):
    pass


class DuplicateCharacter(CastIdError):
    pass


class ParseError(CastIdError):
    pass


class BadMagic(CastIdError):
    pass


class UnsupportedVersion(CastIdError):
    pass


class TruncatedFile(CastIdError):
    pass


class NonFiniteValue(CastIdError):
    pass


class DuplicateId(CastIdError):
    pass


class UnknownTrackId(CastIdError):
    pass


class FrameIndexOutOfRange(CastIdError):
    pass


# --- imageops -------------------------------------------------------------

class BadLimits(CastIdError):
    pass


class AlreadyGray(CastIdError):
    pass


# --- dsp ------------------------------------------------------------------

class TooShort(CastIdError):
    pass


# --- descriptors ----------------------------------------------------------

class EmptyTrack(CastIdError):
    pass


class ZeroVector(CastIdError):
    pass


# --- svm ------------------------------------------------------------------

class SingleClass(CastIdError):
    pass


class EmptyClass(CastIdError):
    pass


# --- selection ------------------------------------------------------------

class BadFraction(CastIdError):
    pass


# --- asv ------------------------------------------------------------------

class EvenWindow(CastIdError):
    pass


class MissingAsvScores(CastIdError):
    pass


# --- pipeline -------------------------------------------------------------

class UncoveredCastEntry(CastIdError):
    pass


class NoTrainSegments(CastIdError):
    pass


class StageOrderError(CastIdError):
    pass


# --- evaluation -----------------------------------------------------------

class MissingPrediction(CastIdError):
    pass


class EmptyCurve(CastIdError):
    pass
