"""
Exception hierarchy shared by the library, the CLI and the Streamlit pages
"""

from typing import Any, Dict, Optional


class ContinuedFractionError(Exception):
    """Base class for every error raised by the toolkit"""


class InvalidDigitError(ContinuedFractionError, ValueError):
    """A partial quotient is not an integer >= 1"""


class NeedsMoreDigitsError(ContinuedFractionError):
    """The digit stream ends before the requested index"""

    def __init__(self, message: str, required: Optional[int] = None, available: Optional[int] = None):
        super().__init__(message)
        self.required = required
        self.available = available


class InsufficientPrecisionError(ContinuedFractionError):
    """An enclosure is too wide to decide a digit or a sign"""


class DomainError(ContinuedFractionError, ValueError):
    """Argument outside the domain of an operation"""


class PatternError(ContinuedFractionError, ValueError):
    """Two digit streams do not share a prefix the way a prefix check requires"""


class BoundViolationError(ContinuedFractionError):
    """A checked inequality failed; carries the input needed to replay it"""

    def __init__(self, message: str, replay: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.replay = replay or {}
