from __future__ import annotations

import os

from .base import Document, Embedder, EmbeddingMatrix, LlmProvider, SearchProvider, simple_tokenize
from .http import FirecrawlSearch, HttpEmbedder, OpenAIChatLlm, OrkgAskSearch
from .mock import (
    HashEmbedder,
    LatticeEmbedder,
    MockLlm,
    MockSearch,
    OrthonormalEmbedder,
    ScriptedLlm,
    StaticSearch,
)
from .retry import RateLimiter, call_with_retry

__all__ = [
    "Document", "Embedder", "EmbeddingMatrix", "LlmProvider", "SearchProvider", "simple_tokenize",
    "FirecrawlSearch", "HttpEmbedder", "OpenAIChatLlm", "OrkgAskSearch",
    "HashEmbedder", "LatticeEmbedder", "MockLlm", "MockSearch", "OrthonormalEmbedder",
    "ScriptedLlm", "StaticSearch", "RateLimiter", "call_with_retry",
    "make_embedder", "make_llm", "make_search",
]


def make_llm(model_id: str, *, seed: int = 0, system_prompt: str = "") -> LlmProvider:
    if model_id == "mock":
        return MockLlm(seed)
    return OpenAIChatLlm(model_id, system_prompt=system_prompt)


def make_search(engine_id: str, *, seed: int = 0) -> SearchProvider:
    if engine_id == "mock":
        return MockSearch(seed)
    if engine_id == "orkg":
        return OrkgAskSearch()
    if engine_id == "firecrawl":
        return FirecrawlSearch()
    raise ValueError(f"unknown search engine {engine_id!r} (expected orkg, firecrawl or mock)")


def make_embedder(endpoint: str | None = None, *, seed: int = 0) -> Embedder:
    """Resolve an embedder from an endpoint string or ``DR_EMBED_ENDPOINT``.

    ``stub`` / ``stub:hash`` / ``stub:lattice`` / ``stub:orthonormal`` select the
    in-process stubs; anything else is treated as an HTTP base URL.
    """
    endpoint = endpoint or os.environ.get("DR_EMBED_ENDPOINT", "")
    if not endpoint:
        raise ValueError("no embedder configured (set --embed-endpoint or DR_EMBED_ENDPOINT)")
    if endpoint.startswith("stub"):
        kind = endpoint.partition(":")[2] or "hash"
        if kind == "hash":
            return HashEmbedder(seed=seed)
        if kind == "lattice":
            return LatticeEmbedder(seed=seed)
        if kind == "orthonormal":
            return OrthonormalEmbedder()
        raise ValueError(f"unknown stub embedder {kind!r}")
    return HttpEmbedder(endpoint)
