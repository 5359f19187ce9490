"""Exception hierarchy for the inquest engine."""


class InquestError(Exception):
    """Base class for all engine errors."""


class TurnBudgetExceeded(InquestError):
    """A turn was appended to (or requested from) a session already at its turn budget."""


class EmptySupport(InquestError):
    """A belief or candidate set was empty where at least one candidate is required."""


class UnanswerableQuestion(InquestError):
    """The question has no defined truth value over the given candidates."""


class InconsistentHistory(InquestError):
    """Filtering by an answer would eliminate every candidate."""


class ParserUnavailable(InquestError):
    """A free-text turn needs an external parser but none is configured."""


class MissingEmbedding(InquestError):
    """No vector is stored for the requested image id or keyword."""


class UnknownTarget(InquestError):
    """The target id does not appear in the ranked list or candidate set."""


class MismatchedUniverse(InquestError):
    """Ranked lists to be fused do not cover the same candidate ids."""


class OutOfRangeSimilarity(InquestError):
    """A similarity fell outside the [0, 1] range required by score fusion."""


class ExhaustedPool(InquestError):
    """Every admissible pool question has zero expected information gain."""


class ExhaustedScript(InquestError):
    """A replay policy ran past the end of its scripted questions."""


class ClientTimeout(InquestError):
    """An external HTTP client did not respond within its timeout."""


class UnparseableQuestion(InquestError):
    """An external questioner reply could not be turned into a question."""


class ParaphraserUnavailable(InquestError):
    """The configured external paraphraser could not be reached."""


class SessionClosed(InquestError):
    """An operation was attempted on a finished or deleted session."""


class LengthMismatch(InquestError):
    """Step scores and turn count disagree."""


class EmptyBatch(InquestError):
    """A benchmark report was requested for zero episodes."""


class MixedTaskKinds(InquestError):
    """A benchmark batch mixes episodes from different task kinds."""


class ConfigError(InquestError):
    """A session or service configuration violates an invariant."""
