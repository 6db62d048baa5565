"""
SecClass - Error Types
Every failure the pipeline can report, grouped into three families
that map onto CLI exit codes.

MIT License - SecClass contributors, 2026
"""

from typing import Any, Dict


class SecClassError(Exception):
    """Base class for all SecClass errors."""

    exit_code = 1

    def __init__(self, message: str = "", **context: Any):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__
        self.context = context

    def to_record(self) -> Dict[str, Any]:
        """Structured error record, as printed by the CLI."""
        return {
            "error": self.__class__.__name__,
            "family": self.family,
            "message": self.message,
            "exit_code": self.exit_code,
            "context": {k: _plain(v) for k, v in self.context.items()},
        }

    @property
    def family(self) -> str:
        for base in (ConfigError, DataError, MethodError):
            if isinstance(self, base):
                return base.__name__
        return "SecClassError"


def _plain(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple, set, frozenset)):
        return [_plain(v) for v in value]
    return str(value)


class ConfigError(SecClassError, ValueError):
    """Invalid configuration, parameters or grid."""
    exit_code = 2


class DataError(SecClassError, ValueError):
    """Input data that cannot be parsed, split or evaluated."""
    exit_code = 3


class MethodError(SecClassError, RuntimeError):
    """A learning method failed to produce a model."""
    exit_code = 4


# corpus
class MissingHeaderLabel(DataError):
    pass


class EmptyBody(DataError):
    pass


class UnknownMarking(DataError):
    pass


class EmptyInput(DataError):
    pass


class BadRatios(ConfigError):
    pass


class TooFewDocuments(DataError):
    pass


# features / topics
class EmptyCorpus(DataError):
    pass


class NoTermsSurvive(DataError):
    pass


# models
class DimensionMismatch(DataError):
    pass


class SingleClass(MethodError):
    pass


class NonFiniteLoss(MethodError):
    pass


class EmptyValidation(DataError):
    pass


class AllTrainingsFailed(MethodError):
    pass


# clustering / topics
class KTooLarge(ConfigError):
    pass


class OutOfRange(DataError):
    pass


class LabelCountMismatch(DataError):
    pass


class BadFractions(ConfigError):
    pass


class EverythingPruned(MethodError):
    pass


# acess
class SingleClassCorpus(DataError):
    pass


class EmptyTrainingSet(DataError):
    pass


# metrics
class EmptyDocumentGroup(DataError):
    pass


class BadN(ConfigError):
    pass


# synthetic / experiment
class BadSpec(ConfigError):
    pass


class SplitMismatch(DataError):
    pass
