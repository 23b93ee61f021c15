"""Exception hierarchy shared by every stage of the pipeline."""


class FobprintError(Exception):
    """Base class for all package errors."""


class InvalidSpan(FobprintError, ValueError):
    pass


class InvalidProfile(FobprintError, ValueError):
    pass


class InvalidDesign(FobprintError, ValueError):
    pass


class ZeroSignal(FobprintError, ValueError):
    pass


class PreambleNotFound(FobprintError):
    pass


class SpanTooShort(FobprintError, ValueError):
    pass


class DegenerateSignal(FobprintError, ValueError):
    pass


class RelayDecodeError(FobprintError):
    """The digital relay could not recover the preamble bits from its input."""


class InvalidTrainingSet(FobprintError, ValueError):
    pass


class TrainingFailed(FobprintError):
    pass


class InvalidInput(FobprintError, ValueError):
    pass


class ParseError(FobprintError, ValueError):
    pass


class TruncatedFile(FobprintError):
    pass


class ManifestError(FobprintError):
    pass


class ConfigError(FobprintError, ValueError):
    pass


class RankingError(FobprintError, ValueError):
    pass
