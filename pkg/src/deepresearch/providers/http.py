"""HTTP-backed providers.

Credentials come from the environment: ``DR_LLM_API_KEY``,
``DR_SEARCH_API_KEY`` and ``DR_EMBED_ENDPOINT``.
"""

from __future__ import annotations

import json
import os
from collections.abc import Mapping
from typing import Any

import httpx
import numpy as np

from ..errors import (
    ContextLengthExceeded,
    EmbedderError,
    MalformedResponse,
    NetworkError,
    ProviderError,
    ProviderRefusal,
    QuotaExceeded,
)
from .base import Document, Embedder, LlmProvider, SearchProvider, is_valid_url
from .retry import RateLimiter, call_with_retry

DEFAULT_TIMEOUT = httpx.Timeout(60.0, connect=10.0)


def estimate_tokens(text: str) -> int:
    """Coarse token estimate (about four characters per token)."""
    return len(text) // 4 + 1


def _send(client: httpx.Client, limiter: RateLimiter, method: str, url: str, *, base_delay: float = 0.5,
          **kwargs) -> Any:
    def attempt():
        with limiter:
            try:
                resp = client.request(method, url, **kwargs)
            except httpx.TransportError as exc:
                raise NetworkError(f"{method} {url}: {exc}") from exc
        if resp.status_code == 429:
            if "insufficient_quota" in resp.text:
                raise QuotaExceeded(f"{url}: quota exhausted")
            raise NetworkError(f"{url}: rate limited (429)")
        if resp.status_code == 402:
            raise QuotaExceeded(f"{url}: payment required")
        if resp.status_code >= 500:
            raise NetworkError(f"{url}: server error {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderError(f"{url}: HTTP {resp.status_code}: {resp.text[:300]}")
        try:
            return resp.json()
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"{url}: response is not JSON") from exc

    return call_with_retry(attempt, base_delay=base_delay)


class OpenAIChatLlm(LlmProvider):
    """Chat-completions client for any OpenAI-compatible endpoint."""

    provider_id = "openai"
    retry_base_delay = 0.5

    def __init__(
        self,
        model: str,
        *,
        api_key: str | None = None,
        base_url: str | None = None,
        system_prompt: str = "",
        context_limit: int = 200_000,
        client: httpx.Client | None = None,
        limiter: RateLimiter | None = None,
    ) -> None:
        self.model = model
        self.api_key = api_key or os.environ.get("DR_LLM_API_KEY", "")
        self.base_url = (base_url or os.environ.get("DR_LLM_BASE_URL") or "https://api.openai.com/v1").rstrip("/")
        self.system_prompt = system_prompt
        self.context_limit = context_limit
        self.client = client or httpx.Client(timeout=DEFAULT_TIMEOUT)
        self.limiter = limiter or RateLimiter()

    def complete_structured(self, prompt: str, schema_id: str, schema: dict | None = None) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        estimate = estimate_tokens(self.system_prompt) + estimate_tokens(prompt)
        if estimate > self.context_limit:
            raise ContextLengthExceeded(
                f"prompt needs ~{estimate} tokens, model accepts {self.context_limit}",
                estimated_tokens=estimate,
                limit=self.context_limit,
            )
        messages = []
        if self.system_prompt:
            messages.append({"role": "system", "content": self.system_prompt})
        messages.append({"role": "user", "content": prompt})
        payload: dict[str, Any] = {"model": self.model, "messages": messages}
        if schema is not None:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {"name": schema_id, "schema": schema, "strict": False},
            }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            data = _send(self.client, self.limiter, "POST", f"{self.base_url}/chat/completions",
                         json=payload, headers=headers, base_delay=self.retry_base_delay)
        except ProviderError as exc:
            if "context_length_exceeded" in str(exc):
                raise ContextLengthExceeded(str(exc), estimated_tokens=estimate, limit=self.context_limit) from exc
            raise
        try:
            message = data["choices"][0]["message"]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse("chat completion without choices") from exc
        if message.get("refusal"):
            raise ProviderRefusal(message["refusal"])
        content = message.get("content")
        if not isinstance(content, str):
            raise MalformedResponse("chat completion without text content")
        return content


def _orkg_url(item: Mapping[str, Any]) -> str | None:
    for candidate in item.get("urls") or []:
        if isinstance(candidate, str) and is_valid_url(candidate):
            return candidate
    url = item.get("url")
    if isinstance(url, str) and is_valid_url(url):
        return url
    doi = item.get("doi")
    if isinstance(doi, str) and doi.strip():
        return f"https://doi.org/{doi.strip()}"
    if item.get("id") is not None:
        return f"https://ask.orkg.org/item/{item['id']}"
    return None


class OrkgAskSearch(SearchProvider):
    """Semantic search over the ORKG Ask scholarly index (title, abstract, URL)."""

    provider_id = "orkg"
    retry_base_delay = 0.5

    def __init__(self, *, base_url: str = "https://api.ask.orkg.org", client: httpx.Client | None = None,
                 limiter: RateLimiter | None = None) -> None:
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=DEFAULT_TIMEOUT)
        self.limiter = limiter or RateLimiter()

    def search(self, query: str, limit: int) -> list[Document]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        data = _send(self.client, self.limiter, "GET", f"{self.base_url}/index/search",
                     params={"query": query, "limit": limit}, base_delay=self.retry_base_delay)
        if not isinstance(data, Mapping):
            raise MalformedResponse("ORKG Ask response is not an object")
        payload = data.get("payload", data)
        items = payload.get("items") if isinstance(payload, Mapping) else None
        if items is None:
            raise MalformedResponse("ORKG Ask response has no items")
        docs = []
        for item in items:
            if not isinstance(item, Mapping):
                continue
            url = _orkg_url(item)
            title = item.get("title") or None
            body = item.get("abstract") or title
            if url is None or not body:
                continue
            docs.append(Document(title=title, body=body, url=url, provider=self.provider_id))
        return docs[:limit]


class FirecrawlSearch(SearchProvider):
    """Web search returning markdown page text."""

    provider_id = "firecrawl"
    retry_base_delay = 0.5

    def __init__(self, *, api_key: str | None = None, base_url: str = "https://api.firecrawl.dev/v1",
                 client: httpx.Client | None = None, limiter: RateLimiter | None = None) -> None:
        self.api_key = api_key or os.environ.get("DR_SEARCH_API_KEY", "")
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=DEFAULT_TIMEOUT)
        self.limiter = limiter or RateLimiter()

    def search(self, query: str, limit: int) -> list[Document]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        data = _send(
            self.client, self.limiter, "POST", f"{self.base_url}/search",
            json={"query": query, "limit": limit, "scrapeOptions": {"formats": ["markdown"]}},
            headers={"Authorization": f"Bearer {self.api_key}"}, base_delay=self.retry_base_delay,
        )
        items = data.get("data") if isinstance(data, Mapping) else None
        if not isinstance(items, list):
            raise MalformedResponse("Firecrawl response has no data list")
        docs = []
        for item in items:
            url = item.get("url") if isinstance(item, Mapping) else None
            body = (item.get("markdown") or item.get("description") or "") if url else ""
            if not url or not is_valid_url(url) or not body.strip():
                continue
            docs.append(Document(title=item.get("title"), body=body, url=url, provider=self.provider_id))
        return docs[:limit]


class HttpEmbedder(Embedder):
    """Remote token embedder.

    Wire format (JSON over POST)::

        {base}/tokenize  {"text": str}          -> {"tokens": [str, ...]}
        {base}/embed     {"tokens": [str, ...]} -> {"vectors": [[float, ...], ...], "model": str}
    """

    retry_base_delay = 0.5

    def __init__(self, base_url: str, *, max_tokens: int = 510, client: httpx.Client | None = None,
                 limiter: RateLimiter | None = None) -> None:
        self.base_url = base_url.rstrip("/")
        self.max_tokens = max_tokens
        self.model_id = base_url
        self.client = client or httpx.Client(timeout=DEFAULT_TIMEOUT)
        self.limiter = limiter or RateLimiter(per_minute=6000, max_concurrent=5)
        self._word_cache: dict[str, np.ndarray] = {}

    def _post(self, path: str, body: dict) -> Mapping:
        try:
            data = _send(self.client, self.limiter, "POST", f"{self.base_url}/{path}", json=body,
                         base_delay=self.retry_base_delay)
        except ProviderError as exc:
            raise EmbedderError(str(exc)) from exc
        if not isinstance(data, Mapping):
            raise EmbedderError(f"{path}: response is not an object")
        return data

    def tokenize(self, text: str) -> list[str]:
        tokens = self._post("tokenize", {"text": text}).get("tokens")
        if not isinstance(tokens, list):
            raise EmbedderError("tokenize: missing tokens")
        return [str(t) for t in tokens]

    def _raw_vectors(self, tokens: list[str]) -> np.ndarray:
        data = self._post("embed", {"tokens": tokens})
        vectors = np.asarray(data.get("vectors"), dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise EmbedderError(f"embed: expected {len(tokens)} vectors, got shape {vectors.shape}")
        if data.get("model"):
            self.model_id = str(data["model"])
        return vectors

    def embed_words(self, words: list[str]) -> np.ndarray:
        missing = [w for w in dict.fromkeys(words) if w not in self._word_cache]
        if missing:
            for word, row in zip(missing, super().embed_words(missing)):
                self._word_cache[word] = row
        if not words:
            return np.zeros((0, 1))
        return np.vstack([self._word_cache[w] for w in words])
