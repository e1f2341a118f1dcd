"""Provider interfaces: LLM completion, document search, token embedding."""

from __future__ import annotations

import abc
import re
from dataclasses import dataclass
from urllib.parse import urlparse

import numpy as np

from ..errors import EmbedderError, TextTooLong


def is_valid_url(url: str) -> bool:
    if not url or any(c.isspace() for c in url):
        return False
    parts = urlparse(url)
    return parts.scheme in {"http", "https"} and bool(parts.netloc)


@dataclass(frozen=True)
class Document:
    body: str
    url: str
    provider: str
    title: str | None = None

    def __post_init__(self) -> None:
        if not is_valid_url(self.url):
            raise ValueError(f"invalid document url: {self.url!r}")
        if not self.body or not self.body.strip():
            raise ValueError(f"document {self.url} has an empty body")


class LlmProvider(abc.ABC):
    provider_id: str = "llm"

    @abc.abstractmethod
    def complete_structured(self, prompt: str, schema_id: str, schema: dict | None = None) -> str:
        """Return raw model text for ``prompt``; validation happens upstream."""


class SearchProvider(abc.ABC):
    provider_id: str = "search"

    @abc.abstractmethod
    def search(self, query: str, limit: int) -> list[Document]:
        ...


@dataclass(frozen=True)
class EmbeddingMatrix:
    tokens: list[str]
    vectors: np.ndarray
    model_id: str

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise EmbedderError(
                f"{len(self.tokens)} tokens but vectors have shape {self.vectors.shape}"
            )
        norms = np.linalg.norm(self.vectors, axis=1)
        if norms.size and np.abs(norms - 1.0).max() > 1e-6:
            raise EmbedderError("embedding rows are not unit-normalised")


def normalize_rows(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if (norms == 0).any():
        raise EmbedderError("embedder returned a zero vector")
    return vectors / norms


_WORDPIECE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def simple_tokenize(text: str) -> list[str]:
    """Lowercased word and punctuation tokens, the stub embedders' tokenizer."""
    return _WORDPIECE.findall(text.lower())


class Embedder(abc.ABC):
    """Token embedder. Subclasses implement ``tokenize`` and ``_raw_vectors``."""

    model_id: str = "embedder"
    max_tokens: int = 510

    @abc.abstractmethod
    def tokenize(self, text: str) -> list[str]:
        ...

    @abc.abstractmethod
    def _raw_vectors(self, tokens: list[str]) -> np.ndarray:
        ...

    def embed(self, tokens: list[str]) -> EmbeddingMatrix:
        if len(tokens) > self.max_tokens:
            raise TextTooLong(len(tokens), self.max_tokens)
        if not tokens:
            return EmbeddingMatrix([], np.zeros((0, 1)), self.model_id)
        vectors = normalize_rows(self._raw_vectors(list(tokens)))
        return EmbeddingMatrix(list(tokens), vectors, self.model_id)

    def embed_tokens(self, text: str) -> EmbeddingMatrix:
        if not text:
            raise ValueError("embed_tokens needs non-empty text")
        return self.embed(self.tokenize(text))

    def embed_words(self, words: list[str]) -> np.ndarray:
        """One unit vector per word, each word embedded in isolation.

        Words that the tokenizer splits into several pieces are mean-pooled.
        """
        rows = []
        for word in words:
            pieces = self.tokenize(word) or [word]
            rows.append(self.embed(pieces[: self.max_tokens]).vectors.mean(axis=0))
        if not rows:
            return np.zeros((0, 1))
        return normalize_rows(np.vstack(rows))

    def ping(self) -> None:
        """Raise if the embedder is unusable."""
        self.embed(["probe"])
