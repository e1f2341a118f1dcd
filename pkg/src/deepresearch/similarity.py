"""Inter-report similarity: ROUGE-L, chunked BERTScore and Word Mover's similarity."""

from __future__ import annotations

import csv
import logging
import math
import re
from collections import Counter
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from nltk.stem.porter import PorterStemmer

from .corpus import ConfigGroup, ReportRecord, align_groups
from .errors import EmptyText
from .kernels.greedy import greedy_match
from .kernels.lcs import lcs_length
from .kernels.transport import solve_transport
from .providers.base import Embedder

log = logging.getLogger(__name__)

METRICS = ("rouge_l", "bertscore", "wmd")
BERT_CHUNK_TOKENS = 510
WMD_MAX_WORDS = 300

# ---------------------------------------------------------------- ROUGE-L

_STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
_ALNUM = re.compile(r"[a-z0-9]+")


@lru_cache(maxsize=200_000)
def _stem(token: str) -> str:
    return _STEMMER.stem(token)


def tokenize_for_rouge(text: str) -> list[str]:
    """Lowercase alphanumeric tokens, Porter-stemmed."""
    return [_stem(t) for t in _ALNUM.findall(text.lower())]


@dataclass(frozen=True)
class RougeResult:
    lcs_length: int
    precision: float
    recall: float
    f1: float


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _encode(a: Sequence[str], b: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    ids: dict[str, int] = {}
    ea = np.fromiter((ids.setdefault(t, len(ids)) for t in a), dtype=np.int64, count=len(a))
    eb = np.fromiter((ids.setdefault(t, len(ids)) for t in b), dtype=np.int64, count=len(b))
    return ea, eb


def rouge_l_f1(a: Sequence[str], b: Sequence[str]) -> RougeResult:
    """ROUGE-L of token list ``a`` (precision side) against ``b`` (recall side).

    Two empty inputs score 1.0; one empty input scores 0.0.
    """
    if not a and not b:
        return RougeResult(0, 1.0, 1.0, 1.0)
    if not a or not b:
        return RougeResult(0, 0.0, 0.0, 0.0)
    ell = lcs_length(*_encode(a, b))
    p, r = ell / len(a), ell / len(b)
    return RougeResult(ell, p, r, _f1(p, r))


def rouge_l_text(a: str, b: str) -> RougeResult:
    return rouge_l_f1(tokenize_for_rouge(a), tokenize_for_rouge(b))


# -------------------------------------------------------------- BERTScore


def chunk_tokens(tokens: Sequence[str], max_tokens: int = BERT_CHUNK_TOKENS) -> list[list[str]]:
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    return [list(tokens[i : i + max_tokens]) for i in range(0, len(tokens), max_tokens)]


def chunk_text(text: str, max_tokens: int = BERT_CHUNK_TOKENS, *,
               tokenize: Callable[[str], list[str]] | None = None) -> list[list[str]]:
    """Greedy consecutive chunks of at most ``max_tokens`` tokenizer tokens."""
    if tokenize is None:
        from .providers.base import simple_tokenize as tokenize
    return chunk_tokens(tokenize(text), max_tokens)


@dataclass(frozen=True)
class BertScoreResult:
    precision: float
    recall: float
    f1: float
    n_chunk_pairs: int


def _embed_chunks(text: str, embedder: Embedder, max_tokens: int) -> list[np.ndarray]:
    chunks = chunk_text(text, min(max_tokens, embedder.max_tokens), tokenize=embedder.tokenize)
    return [embedder.embed(c).vectors for c in chunks]


def _bertscore_from_chunks(ca: list[np.ndarray], cb: list[np.ndarray], pooling: str) -> BertScoreResult:
    if not ca and not cb:
        return BertScoreResult(1.0, 1.0, 1.0, 0)
    if not ca or not cb:
        return BertScoreResult(0.0, 0.0, 0.0, 0)
    if pooling == "pooled":
        p, r = greedy_match(np.vstack(ca), np.vstack(cb))
        return BertScoreResult(p, r, _f1(p, r), 1)
    if pooling != "positional":
        raise ValueError(f"unknown chunk pooling {pooling!r}")
    ps, rs, fs = [], [], []
    for A, B in zip(ca, cb):
        p, r = greedy_match(A, B)
        ps.append(p)
        rs.append(r)
        fs.append(_f1(p, r))
    k = len(fs)
    return BertScoreResult(sum(ps) / k, sum(rs) / k, sum(fs) / k, k)


def bertscore(a: str, b: str, embedder: Embedder, *, max_tokens: int = BERT_CHUNK_TOKENS,
              pooling: str = "positional") -> BertScoreResult:
    """Greedy-matching BERTScore without IDF weighting.

    With ``pooling="positional"`` the i-th chunk of ``a`` is scored against
    the i-th chunk of ``b`` (up to the shorter chunk list) and the chunk-level
    values are averaged. ``pooling="pooled"`` matches all tokens of both
    documents at once. Byte-identical texts score exactly 1.0 without
    embedding.
    """
    if a == b:
        return BertScoreResult(1.0, 1.0, 1.0, 0)
    return _bertscore_from_chunks(_embed_chunks(a, embedder, max_tokens), _embed_chunks(b, embedder, max_tokens), pooling)


def bertscore_f1(a: str, b: str, embedder: Embedder, **kwargs) -> float:
    return bertscore(a, b, embedder, **kwargs).f1


# -------------------------------------------------------------------- WMD


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    text = resources.files("deepresearch.assets.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.split() if w.strip())


def word_distribution(text: str, *, stopwords: frozenset[str] | None = None,
                      max_words: int | None = WMD_MAX_WORDS) -> tuple[list[str], np.ndarray]:
    """Normalised frequencies of the most frequent non-stopword words.

    Ties in frequency are broken by first occurrence.
    """
    stop = default_stopwords() if stopwords is None else stopwords
    words = [w for w in _ALNUM.findall(text.lower()) if w not in stop]
    counts = Counter(words)
    first = {}
    for i, w in enumerate(words):
        first.setdefault(w, i)
    ranked = sorted(counts, key=lambda w: (-counts[w], first[w]))
    if max_words is not None:
        ranked = ranked[:max_words]
    # restore text order so the layout does not depend on the ranking
    ranked.sort(key=first.__getitem__)
    weights = np.array([counts[w] for w in ranked], dtype=np.float64)
    if weights.size:
        weights /= weights.sum()
    return ranked, weights


@dataclass(frozen=True)
class WmdResult:
    distance: float
    plan: np.ndarray
    words_a: list[str]
    words_b: list[str]

    @property
    def similarity(self) -> float:
        return 1.0 - self.distance


def word_cost_matrix(words_a: Sequence[str], Ea: np.ndarray, words_b: Sequence[str], Eb: np.ndarray) -> np.ndarray:
    """``1 - cos`` between word vectors; identical words cost exactly 0."""
    C = 1.0 - np.clip(Ea @ Eb.T, -1.0, 1.0)
    index_b = {w: j for j, w in enumerate(words_b)}
    for i, w in enumerate(words_a):
        j = index_b.get(w)
        if j is not None:
            C[i, j] = 0.0
    return np.clip(C, 0.0, 2.0)


def _wmd_from_parts(pa, pb) -> WmdResult:
    (wa, xa, Ea), (wb, xb, Eb) = pa, pb
    if not wa and not wb:
        return WmdResult(0.0, np.zeros((0, 0)), [], [])
    if not wa or not wb:
        raise EmptyText("word mover's distance is undefined when exactly one text is empty")
    C = word_cost_matrix(wa, Ea, wb, Eb)
    sol = solve_transport(xa, xb, C)
    return WmdResult(sol.cost, sol.plan, wa, wb)


def _wmd_parts(text: str, embedder: Embedder, stopwords, max_words):
    words, weights = word_distribution(text, stopwords=stopwords, max_words=max_words)
    vectors = embedder.embed_words(words) if words else np.zeros((0, 1))
    return words, weights, vectors


def wmd(a: str, b: str, embedder: Embedder, *, stopwords: frozenset[str] | None = None,
        max_words: int | None = WMD_MAX_WORDS) -> WmdResult:
    if a == b:
        words, weights = word_distribution(a, stopwords=stopwords, max_words=max_words)
        return WmdResult(0.0, np.diag(weights) if words else np.zeros((0, 0)), words, words)
    return _wmd_from_parts(_wmd_parts(a, embedder, stopwords, max_words), _wmd_parts(b, embedder, stopwords, max_words))


def wmd_similarity(a: str, b: str, embedder: Embedder, **kwargs) -> float:
    """``1 - WMD(a, b)``; 1.0 for two empty texts."""
    return wmd(a, b, embedder, **kwargs).similarity


# --------------------------------------------------------- group matrices


@dataclass(frozen=True)
class SimilarityMatrix:
    config_labels: list[str]
    metric: str
    values: np.ndarray
    pair_counts: np.ndarray

    def missing(self) -> list[tuple[str, str]]:
        idx = np.argwhere(self.pair_counts == 0)
        return [(self.config_labels[i], self.config_labels[j]) for i, j in idx if i < j]


class _Scorer:
    """Per-record preparation cached once, then a cheap pairwise score."""

    def __init__(self, metric: str, embedder: Embedder | None, text: Callable[[ReportRecord], str], **options) -> None:
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}; expected one of {METRICS}")
        if metric != "rouge_l" and embedder is None:
            raise ValueError(f"metric {metric!r} needs an embedder")
        self.metric = metric
        self.embedder = embedder
        self.text = text
        self.options = options
        self._cache: dict[int, object] = {}

    def prepare(self, rec: ReportRecord):
        key = id(rec)
        if key not in self._cache:
            body = self.text(rec)
            if self.metric == "rouge_l":
                self._cache[key] = tokenize_for_rouge(body)
            elif self.metric == "bertscore":
                self._cache[key] = _embed_chunks(body, self.embedder, self.options.get("max_tokens", BERT_CHUNK_TOKENS))
            else:
                self._cache[key] = _wmd_parts(body, self.embedder, self.options.get("stopwords"),
                                              self.options.get("max_words", WMD_MAX_WORDS))
        return self._cache[key]

    def score(self, a: ReportRecord, b: ReportRecord) -> float:
        if a is b or self.text(a) == self.text(b):
            # identity is exact by definition; skip float round-off in the embeddings
            return 1.0
        pa, pb = self.prepare(a), self.prepare(b)
        if self.metric == "rouge_l":
            return rouge_l_f1(pa, pb).f1
        if self.metric == "bertscore":
            return _bertscore_from_chunks(pa, pb, self.options.get("pooling", "positional")).f1
        return _wmd_from_parts(pa, pb).similarity


def pairwise_matrix(groups: Sequence[ConfigGroup], metric: str, embedder: Embedder | None = None, *,
                    jobs: int = 1, text: Callable[[ReportRecord], str] | None = None, **options) -> SimilarityMatrix:
    """Mean metric over index-aligned report pairs for every pair of groups.

    Cells whose groups share no index are NaN with a pair count of 0.
    """
    if not groups:
        raise ValueError("need at least one configuration group")
    scorer = _Scorer(metric, embedder, text or (lambda r: r.prose), **options)
    labels = [str(g.label) for g in groups]
    k = len(groups)
    values = np.full((k, k), np.nan)
    counts = np.zeros((k, k), dtype=np.int64)

    cells = [(i, j) for i in range(k) for j in range(i, k)]
    jobs_list = {(i, j): align_groups(groups[i], groups[j]) for i, j in cells}
    # warm the per-record cache serially: embedders may not be thread-safe
    for pairs in jobs_list.values():
        for _, ra, rb in pairs:
            scorer.prepare(ra)
            scorer.prepare(rb)

    def cell(ij):
        pairs = jobs_list[ij]
        if not pairs:
            return ij, math.nan, 0
        return ij, float(np.mean([scorer.score(ra, rb) for _, ra, rb in pairs])), len(pairs)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            results = list(pool.map(cell, cells))
    else:
        results = [cell(ij) for ij in cells]
    for (i, j), v, n in results:
        values[i, j] = values[j, i] = v
        counts[i, j] = counts[j, i] = n
    return SimilarityMatrix(labels, metric, values, counts)


def write_matrix_csv(path: str | Path, matrix: SimilarityMatrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([""] + matrix.config_labels)
        for label, row in zip(matrix.config_labels, matrix.values):
            w.writerow([label] + ["" if math.isnan(v) else repr(float(v)) for v in row])


def write_pair_counts_csv(path: str | Path, matrix: SimilarityMatrix) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([""] + matrix.config_labels)
        for label, row in zip(matrix.config_labels, matrix.pair_counts):
            w.writerow([label] + [int(v) for v in row])


def read_matrix_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    labels = rows[0][1:]
    values = np.array([[math.nan if c == "" else float(c) for c in r[1:]] for r in rows[1:]])
    return labels, values
