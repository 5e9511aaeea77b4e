"""Exception hierarchy shared by all engine modules.

Every domain error derives from CharmError and carries a stable ``name``
used by the HTTP layer to echo machine-readable error identifiers.
"""

from __future__ import annotations


class CharmError(Exception):
    """Base class for all engine errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class TooLong(CharmError):
    """Prompt exceeds the maximum token count."""


class EmptyPhrase(CharmError):
    """Phrase tokenizes to nothing."""


class EmptyPrompt(CharmError):
    """Refinement called with an empty prompt."""


class EmptyQuery(CharmError):
    """Search called with a query that tokenizes to nothing."""


class InvalidConfig(CharmError):
    """Model configuration violates an invariant."""


class DimensionMismatch(CharmError):
    """Array shapes disagree with the configured dimensions."""


class GammaOutOfRange(CharmError):
    def __init__(self, index: int, gamma: float):
        super().__init__(f"gamma {gamma} for token {index} outside [0.5, 2.0]")
        self.index = index
        self.gamma = gamma


class IndexOutOfRange(CharmError):
    def __init__(self, index: int, count: int):
        super().__init__(f"token index {index} outside prompt of {count} tokens")
        self.index = index
        self.count = count


class IncompleteTrace(CharmError):
    """Attention trace is missing (step, layer, head) records."""


class EmptyImage(CharmError):
    """Image has zero pixels."""


class ExternalUnavailable(CharmError):
    """External refiner timed out, failed, or broke its contract."""


class UnknownParent(CharmError):
    """Commit references a parent version that does not exist."""


class UnknownVersion(CharmError):
    """Version id not present in the session."""


class CorruptSession(CharmError):
    """Session archive failed checksum or structural validation."""


class MissingArtifact(CharmError):
    """A version references an artifact that is not stored."""


class PortInUse(CharmError):
    """Requested service port is already bound."""


class BadConfig(CharmError):
    """Service configuration is invalid."""
