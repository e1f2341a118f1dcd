"""Exception hierarchy shared across the package."""

from __future__ import annotations


class DeepResearchError(Exception):
    """Base class for every error raised by this package."""


# --- provider layer -------------------------------------------------------


class ProviderError(DeepResearchError):
    """A provider call failed. ``node_path`` is filled in by the engine."""

    retryable = False

    def __init__(self, message: str, *, node_path: str | None = None) -> None:
        super().__init__(message)
        self.node_path = node_path

    def __str__(self) -> str:
        base = super().__str__()
        if self.node_path:
            return f"[node {self.node_path}] {base}"
        return base


class NetworkError(ProviderError):
    retryable = True


class QuotaExceeded(ProviderError):
    pass


class MalformedResponse(ProviderError):
    pass


class ContextLengthExceeded(ProviderError):
    def __init__(self, message: str, *, estimated_tokens: int, limit: int) -> None:
        super().__init__(message)
        self.estimated_tokens = estimated_tokens
        self.limit = limit


class ProviderRefusal(ProviderError):
    pass


class EmbedderError(ProviderError):
    pass


class TextTooLong(EmbedderError):
    def __init__(self, n_tokens: int, max_tokens: int) -> None:
        super().__init__(f"text has {n_tokens} tokens, embedder accepts at most {max_tokens}")
        self.n_tokens = n_tokens
        self.max_tokens = max_tokens


# --- agents / engine ------------------------------------------------------


class SchemaViolation(DeepResearchError):
    """Structured LLM output did not match its schema."""

    def __init__(self, message: str, *, path: str = "$", raw: str = "") -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
        self.raw = raw


class BudgetExceeded(DeepResearchError):
    pass


class EmptyFrontier(DeepResearchError):
    pass


# --- corpus / metrics -----------------------------------------------------


class MalformedName(DeepResearchError, ValueError):
    pass


class UnknownCategory(DeepResearchError, KeyError):
    pass


class ZeroLength(DeepResearchError, ValueError):
    pass


class EmptyText(DeepResearchError, ValueError):
    pass


class NoOverlap(DeepResearchError):
    pass
