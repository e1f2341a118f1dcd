"""Deterministic providers for tests, dry runs and benchmarks.

Every mock is a pure function of its seed and inputs.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import re
import threading
from collections.abc import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..errors import EmbedderError
from .base import Document, Embedder, LlmProvider, SearchProvider, simple_tokenize

_TOPICS = [
    "grassland", "wetland", "forest", "pollinator", "soil microbial", "invasive species",
    "coral reef", "alpine meadow", "riparian", "savanna", "boreal", "tropical",
]
_PROCESSES = [
    "nutrient cycling", "trophic cascade", "feedback", "succession", "predation",
    "competition", "mutualism", "decomposition", "herbivory", "disturbance", "resilience",
]
_DRIVERS = [
    "grazing", "mowing", "fertilizer", "restoration", "controlled burn", "climate change",
    "drought", "warming", "habitat loss", "rewilding", "irrigation", "protected area",
]
_OUTCOMES = [
    "species richness", "functional diversity", "biomass", "carbon storage", "pollination",
    "water quality", "soil erosion", "native cover", "genetic diversity", "ecosystem services",
]
_CONNECT = ["because", "due to", "results in", "drives", "regulates", "leads to", "induces"]
_HEDGES = ["might", "could", "may", "suggests", "potentially"]
_AUTHORS = ["Smith", "Garcia", "Chen", "Müller", "Okafor", "Silva", "Novak", "Tanaka"]


def _digest(*parts: object) -> bytes:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


def _rng(*parts: object) -> np.random.Generator:
    return np.random.default_rng(int.from_bytes(_digest(*parts)[:8], "little"))


def _pick(rng: np.random.Generator, items: Sequence[str]) -> str:
    return items[int(rng.integers(len(items)))]


def _sentence(rng: np.random.Generator) -> str:
    templates = [
        "{d} {c} shifts in {o} through {p} in {t} systems",
        "In {t} sites, {p} {c} lower {o} within {n} months of {d}",
        "Evidence from {n} {t} plots {h} indicate that {d} alters {p} ({a} et al., {y})",
        "{a} et al. ({y}) report that {p} {c} recovery of {o} after {d}",
        "Between {y0}–{y} the effect of {d} on {o} was mediated by {p}",
    ]
    fmt = _pick(rng, templates)
    y = int(rng.integers(1995, 2024))
    text = fmt.format(
        d=_pick(rng, _DRIVERS), c=_pick(rng, _CONNECT), o=_pick(rng, _OUTCOMES),
        p=_pick(rng, _PROCESSES), t=_pick(rng, _TOPICS), h=_pick(rng, _HEDGES),
        a=_pick(rng, _AUTHORS), n=int(rng.integers(2, 40)), y=y, y0=y - int(rng.integers(5, 30)),
    )
    return text[0].upper() + text[1:] + "."


def _paragraph(rng: np.random.Generator, n: int) -> str:
    return " ".join(_sentence(rng) for _ in range(n))


def _cap(schema: Mapping | None, prop: str, default: int) -> int:
    try:
        return int(schema["properties"][prop]["maxItems"])
    except (KeyError, TypeError):
        return default


_LEARNING_RE = re.compile(r"<learning>\n?(.*?)\n?</learning>", re.S)


class MockLlm(LlmProvider):
    """Answers every schema with a well-formed payload at the full item budget.

    The budget is read from ``maxItems`` in the request schema; ``fill`` scales
    it down (``fill=0`` makes serp-query generation return nothing).
    """

    provider_id = "mock"

    def __init__(self, seed: int = 0, *, fill: float = 1.0) -> None:
        self.seed = seed
        self.fill = fill
        self.calls = 0
        self._lock = threading.Lock()

    def _budget(self, schema, prop, default) -> int:
        return int(round(_cap(schema, prop, default) * self.fill))

    def complete_structured(self, prompt: str, schema_id: str, schema: dict | None = None) -> str:
        with self._lock:
            self.calls += 1
        rng = _rng(self.seed, schema_id, prompt)
        tag = _digest(self.seed, prompt).hex()[:6]
        if schema_id == "serp_queries":
            items = []
            for k in range(self._budget(schema, "queries", 3)):
                q = f"{_pick(rng, _DRIVERS)} {_pick(rng, _PROCESSES)} {_pick(rng, _TOPICS)} {tag}{k}"
                goal = f"Establish how {_pick(rng, _DRIVERS)} shapes {_pick(rng, _OUTCOMES)} via {_pick(rng, _PROCESSES)}."
                items.append({"query": q, "researchGoal": goal})
            return json.dumps({"queries": items})
        if schema_id == "node_result":
            learnings = [_sentence(rng) for _ in range(self._budget(schema, "learnings", 3))]
            followups = [
                f"How does {_pick(rng, _DRIVERS)} modify {_pick(rng, _PROCESSES)} in {_pick(rng, _TOPICS)} habitats?"
                for _ in range(self._budget(schema, "followUpQuestions", 3))
            ]
            return json.dumps({"learnings": learnings, "followUpQuestions": followups})
        if schema_id == "report":
            learnings = [m.strip() for m in _LEARNING_RE.findall(prompt)]
            parts = [f"# Synthesis report {tag}", "", "## Overview", "", _paragraph(rng, 4), "", "## Findings", ""]
            parts += [f"- {item}" for item in learnings]
            parts += ["", "## Discussion", "", _paragraph(rng, 5), "", "## Research gaps", "",
                      "Long-term responses remain understudied and represent a research gap.", ""]
            return json.dumps({"reportMarkdown": "\n".join(parts)})
        raise ValueError(f"mock has no fixture for schema {schema_id!r}")


class ScriptedLlm(LlmProvider):
    """Replays canned raw responses per schema id and records every prompt."""

    provider_id = "scripted"

    def __init__(self, responses: Mapping[str, Iterable[str] | Callable[[str], str]]) -> None:
        self._responses = {
            k: (v if callable(v) else iter(list(v))) for k, v in responses.items()
        }
        self.prompts: list[tuple[str, str]] = []

    def complete_structured(self, prompt: str, schema_id: str, schema: dict | None = None) -> str:
        self.prompts.append((schema_id, prompt))
        source = self._responses[schema_id]
        if callable(source):
            return source(prompt)
        try:
            return next(source)
        except StopIteration:
            raise AssertionError(f"script for {schema_id!r} exhausted") from None


class MockSearch(SearchProvider):
    """Synthetic abstracts keyed on (seed, query, rank).

    With ``url_space`` set, URLs are drawn from that many slots so overlapping
    results across queries become likely.
    """

    provider_id = "mock"

    def __init__(self, seed: int = 0, *, docs_per_query: int = 10, url_space: int | None = None) -> None:
        self.seed = seed
        self.docs_per_query = docs_per_query
        self.url_space = url_space
        self.calls = 0
        self._lock = threading.Lock()

    def search(self, query: str, limit: int) -> list[Document]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        with self._lock:
            self.calls += 1
        docs = []
        for rank in range(min(limit, self.docs_per_query)):
            key = _digest(self.seed, query, rank)
            slot = int.from_bytes(key[:8], "little")
            ident = f"{slot % self.url_space}" if self.url_space else key.hex()[:16]
            rng = _rng(self.seed, query, rank, "body")
            docs.append(
                Document(
                    title=f"{_pick(rng, _PROCESSES).capitalize()} under {_pick(rng, _DRIVERS)}",
                    body=_paragraph(rng, 3),
                    url=f"https://mock.example.org/doc/{ident}",
                    provider=self.provider_id,
                )
            )
        return docs


class StaticSearch(SearchProvider):
    """Returns the same fixed document list, truncated to ``limit``."""

    provider_id = "static"

    def __init__(self, documents: Sequence[Document]) -> None:
        self.documents = list(documents)

    def search(self, query: str, limit: int) -> list[Document]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        return self.documents[:limit]


class _StubEmbedder(Embedder):
    def __init__(self, max_tokens: int = 510) -> None:
        self.max_tokens = max_tokens

    def tokenize(self, text: str) -> list[str]:
        return simple_tokenize(text)


class HashEmbedder(_StubEmbedder):
    """Gaussian vector per distinct token, seeded by the token's hash."""

    def __init__(self, dim: int = 64, seed: int = 0, max_tokens: int = 510) -> None:
        super().__init__(max_tokens)
        self.dim = dim
        self.seed = seed
        self.model_id = f"stub-hash-{dim}"

    def _raw_vectors(self, tokens: list[str]) -> np.ndarray:
        return np.vstack([_rng(self.seed, t).standard_normal(self.dim) for t in tokens])


class OrthonormalEmbedder(_StubEmbedder):
    """Each distinct token gets its own standard basis vector (first-seen order)."""

    def __init__(self, dim: int = 2048, max_tokens: int = 510) -> None:
        super().__init__(max_tokens)
        self.dim = dim
        self.model_id = f"stub-orthonormal-{dim}"
        self._index: dict[str, int] = {}
        self._lock = threading.Lock()

    def _raw_vectors(self, tokens: list[str]) -> np.ndarray:
        out = np.zeros((len(tokens), self.dim))
        with self._lock:
            for row, tok in enumerate(tokens):
                if tok not in self._index:
                    if len(self._index) >= self.dim:
                        raise EmbedderError("orthonormal stub ran out of basis vectors")
                    self._index[tok] = len(self._index)
                out[row, self._index[tok]] = 1.0
        return out


# Vectors in {-1, 0, 1}^4 with one or four non-zeros: after normalisation every
# component is 0, +-1/2 or +-1, so all cosines are exact binary fractions.
_LATTICE = np.array(
    [v for v in itertools.product((-1.0, 0.0, 1.0), repeat=4) if sum(map(abs, v)) in (1, 4)]
)


class LatticeEmbedder(_StubEmbedder):
    """Maps tokens to 24 lattice vectors whose cosines are exactly representable."""

    model_id = "stub-lattice"

    def __init__(self, seed: int = 0, max_tokens: int = 510) -> None:
        super().__init__(max_tokens)
        self.seed = seed

    def _raw_vectors(self, tokens: list[str]) -> np.ndarray:
        idx = [int.from_bytes(_digest(self.seed, t)[:4], "little") % len(_LATTICE) for t in tokens]
        return _LATTICE[idx]
