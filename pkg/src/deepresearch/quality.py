"""Vocabulary- and regex-driven report quality scores.

Six capped, weighted sub-scores (depth, breadth, ecological focus, rigor,
innovation, information density), each in [0, 1], plus a weighted composite.
"""

from __future__ import annotations

import json
import math
import re
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .corpus import ReportRecord, strip_sources
from .errors import UnknownCategory, ZeroLength

REQUIRED_CATEGORIES = (
    "mechanistic_terms", "causal_connectives", "result_indicators", "mechanistic_verbs",
    "geographic_regions", "intervention_types", "biodiversity_dimensions", "ecosystem_services",
    "spatial_scales", "conservation_terms", "climate_terms", "complexity_terms",
    "statistical_terms", "uncertainty_terms", "speculative_terms", "novelty_terms", "gap_terms",
)

UNIQUE_CATEGORIES = frozenset({
    "geographic_regions", "intervention_types", "biodiversity_dimensions",
    "ecosystem_services", "spatial_scales",
})

SCORE_NAMES = ("depth", "breadth", "ecological", "rigor", "innovation", "density")


class Vocabulary:
    """Category name -> phrase list, lowercased and de-duplicated."""

    def __init__(self, categories: Mapping[str, list[str]]) -> None:
        clean: dict[str, list[str]] = {}
        for name, phrases in categories.items():
            seen: dict[str, None] = {}
            for p in phrases:
                p = str(p).strip().lower()
                if p:
                    seen[p] = None
            clean[name] = list(seen)
        self.categories = clean

    def __getitem__(self, name: str) -> list[str]:
        try:
            return self.categories[name]
        except KeyError:
            raise UnknownCategory(name) from None

    def __contains__(self, name: str) -> bool:
        return name in self.categories

    def merged(self, overrides: Mapping[str, list[str]]) -> Vocabulary:
        return Vocabulary({**self.categories, **overrides})

    @classmethod
    def from_json(cls, path: str | Path, *, base: Vocabulary | None = None) -> Vocabulary:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict) or not all(isinstance(v, list) for v in data.values()):
            raise ValueError(f"{path}: expected a JSON object mapping category -> list of phrases")
        return (base or default_vocabulary()).merged(data)


@lru_cache(maxsize=1)
def default_vocabulary() -> Vocabulary:
    text = resources.files("deepresearch.assets.data").joinpath("ecology_vocab.json").read_text("utf-8")
    return Vocabulary(json.loads(text))


@lru_cache(maxsize=4096)
def _phrase_regex(phrases: tuple[str, ...]) -> re.Pattern | None:
    if not phrases:
        return None
    # longest first so a long phrase wins over any phrase it contains
    ordered = sorted(phrases, key=lambda p: (-len(p), p))
    return re.compile("|".join(re.escape(p) for p in ordered))


def _matches(text: str, phrases: list[str]) -> list[str]:
    rx = _phrase_regex(tuple(phrases))
    if rx is None or not text:
        return []
    return rx.findall(text.lower())


def count_vocab_matches(text: str, category: str, vocab: Vocabulary, mode: str = "occurrences") -> int:
    """Case-insensitive, non-overlapping substring matches of a category's phrases.

    ``occurrences`` counts every hit; ``unique`` counts distinct phrases hit.
    """
    phrases = vocab[category]
    hits = _matches(text, phrases)
    if mode == "occurrences":
        return len(hits)
    if mode == "unique":
        return len(set(hits))
    raise ValueError(f"unknown counting mode {mode!r}")


_NUM_WORDS = r"(?:\d+(?:\.\d+)?|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|twenty|thirty|fifty|hundred)"
_UNIT = r"(?:days?|weeks?|months?|years?|yrs?|decades?|centuries|century)"
_YEAR = r"(?:1[5-9]\d{2}|20\d{2})"

DEFAULT_TEMPORAL_SPECIFIC = [
    rf"\b(?:within|every|over|after|for|during|up to|at least|about|approximately|over the past|over the last|in the first)\s+{_NUM_WORDS}(?:\s*(?:-|–|to)\s*{_NUM_WORDS})?[\s-]*{_UNIT}\b",
    rf"\b{_YEAR}s?\s*(?:-|–|\u2014|to)\s*{_YEAR}s?\b",
    rf"\b(?:since|in|by|from|until|before|after)\s+{_YEAR}s?\b",
    rf"\b{_NUM_WORDS}(?:\s*(?:-|–|to)\s*{_NUM_WORDS})?[\s-]*{_UNIT}\b",
]

DEFAULT_AREA_MEASURE = (
    r"\b\d+(?:[.,]\d+)?\s*(km2|km²|km\^2|square kilomet(?:er|re)s?|hectares?|ha|m2|m²|square met(?:er|re)s?|acres?)(?![\w])"
)

_AREA_UNITS = {
    "km2": "km2", "km²": "km2", "km^2": "km2", "ha": "ha", "m2": "m2", "m²": "m2",
}


@dataclass(frozen=True)
class ScoringConfig:
    """Regex patterns, counting overrides and zero-denominator policy."""

    temporal_specific: tuple[str, ...] = tuple(DEFAULT_TEMPORAL_SPECIFIC)
    temporal_vague_category: str = "temporal_vague"
    temporal_when_empty: float = 0.0
    area_measure: str = DEFAULT_AREA_MEASURE
    count_modes: Mapping[str, str] = field(default_factory=dict)

    def mode(self, category: str) -> str:
        return self.count_modes.get(category, "unique" if category in UNIQUE_CATEGORIES else "occurrences")


DEFAULT_CONFIG = ScoringConfig()


@lru_cache(maxsize=64)
def _compile_any(patterns: tuple[str, ...]) -> re.Pattern:
    return re.compile("|".join(f"(?:{p})" for p in patterns), re.I)


def temporal_precision(text: str, vocab: Vocabulary | None = None, config: ScoringConfig = DEFAULT_CONFIG) -> float:
    """Share of temporal mentions that are specific (quantified or dated)."""
    vocab = vocab or default_vocabulary()
    rx = _compile_any(config.temporal_specific)
    specific = 0
    masked = []
    pos = 0
    for m in rx.finditer(text):
        specific += 1
        masked.append(text[pos : m.start()])
        masked.append(" ")
        pos = m.end()
    masked.append(text[pos:])
    vague_text = "".join(masked)
    vague = 0
    if config.temporal_vague_category in vocab:
        vague = len(_matches(vague_text, vocab[config.temporal_vague_category]))
    total = specific + vague
    if total == 0:
        return config.temporal_when_empty
    return specific / total


_PAREN_RE = re.compile(r"\(([^()]*)\)")
_PAREN_ITEM_RE = re.compile(
    r"^\s*(?:e\.g\.,?\s*|see\s+|cf\.\s*)?[A-Z][^\d;()]*?,?\s+(?:19|20)\d{2}[a-z]?(?:\s*,\s*(?:19|20)\d{2}[a-z]?)*\s*$"
)
_NARRATIVE_RE = re.compile(
    r"\b[A-Z][\w'\-]+(?:\s+(?:and|&)\s+[A-Z][\w'\-]+|\s+et\s+al\.?)?\s+\((?:19|20)\d{2}[a-z]?\)"
)


def count_citations(text: str) -> int:
    """Parenthetical author-year items plus narrative ``Name et al. (year)`` citations."""
    n = 0
    for group in _PAREN_RE.findall(text):
        n += sum(1 for item in group.split(";") if _PAREN_ITEM_RE.match(item))
    n += len(_NARRATIVE_RE.findall(text))
    return n


def count_area_measures(text: str, pattern: str = DEFAULT_AREA_MEASURE) -> int:
    """Distinct area units that appear with a number (``12 ha``, ``3 km²``)."""
    units = set()
    for m in re.finditer(pattern, text, re.I):
        unit = m.group(1).lower()
        units.add(_AREA_UNITS.get(unit, unit.rstrip("s").replace("metre", "meter")))
    return len(units)


# --- signal records ------------------------------------------------------


@dataclass(frozen=True)
class DepthSignals:
    m_mech: float
    m_causal: float
    m_temporal: float


@dataclass(frozen=True)
class BreadthSignals:
    g_regions: float
    i_types: float
    d_dims: float
    e_services: float
    s_scales: float


@dataclass(frozen=True)
class EcologicalSignals:
    c_conservation: float
    c_climate: float
    e_complexity: float


@dataclass(frozen=True)
class RigorSignals:
    r_statistical: float
    c_formal: float
    u_acknowledgment: float


@dataclass(frozen=True)
class InnovationSignals:
    i_speculative: float
    i_indicators: float
    g_research: float


def _capped(x: float, cap: float) -> float:
    return min(x / cap, 1.0)


def _unit(x: float) -> float:
    # guards only against float round-off at the boundaries
    return min(max(x, 0.0), 1.0)


# (signal field, weight, cap) per equation; a cap of None means the signal is already a ratio
EQUATION_TERMS: dict[str, tuple[tuple[str, float, float | None], ...]] = {
    "depth": (("m_mech", 0.4, 20), ("m_causal", 0.3, 10), ("m_temporal", 0.3, None)),
    "breadth": (("g_regions", 0.25, 8), ("i_types", 0.25, 12), ("d_dims", 0.25, 8),
                ("e_services", 0.15, 10), ("s_scales", 0.10, 6)),
    "ecological": (("c_conservation", 0.4, 8), ("c_climate", 0.3, 6), ("e_complexity", 0.3, 5)),
    "rigor": (("r_statistical", 0.4, 5), ("c_formal", 0.4, 20), ("u_acknowledgment", 0.2, 5)),
    "innovation": (("i_speculative", 0.4, 3), ("i_indicators", 0.3, 3), ("g_research", 0.3, 3)),
}
EQUATION_WEIGHTS = {name: tuple(w for _, w, _ in terms) for name, terms in EQUATION_TERMS.items()}


def _weighted(name: str, signals) -> float:
    total = 0.0
    for attr, weight, cap in EQUATION_TERMS[name]:
        x = getattr(signals, attr)
        total += weight * (x if cap is None else _capped(x, cap))
    return _unit(total)


def score_depth(s: DepthSignals) -> float:
    return _weighted("depth", s)


def score_breadth(s: BreadthSignals) -> float:
    return _weighted("breadth", s)


def score_ecological(s: EcologicalSignals) -> float:
    return _weighted("ecological", s)


def score_rigor(s: RigorSignals) -> float:
    return _weighted("rigor", s)


def score_innovation(s: InnovationSignals) -> float:
    return _weighted("innovation", s)


def sources_per_kword(n_sources: float, word_count: float) -> float:
    if word_count <= 0:
        raise ZeroLength("word count must be positive")
    return n_sources / (word_count / 1000.0)


def score_density(n_sources: float, word_count: float) -> float:
    """Sources per 1,000 words, saturating at 50."""
    return _unit(min(sources_per_kword(n_sources, word_count) / 50.0, 1.0))


# --- aggregation ----------------------------------------------------------

UNIFORM_WEIGHTS: dict[str, float] = {name: 1.0 / 6.0 for name in SCORE_NAMES}


def check_weights(weights: Mapping[str, float]) -> dict[str, float]:
    unknown = set(weights) - set(SCORE_NAMES)
    if unknown:
        raise ValueError(f"unknown score names in weights: {sorted(unknown)}")
    w = {name: float(weights.get(name, 0.0)) for name in SCORE_NAMES}
    if any(v < 0 for v in w.values()):
        raise ValueError("weights must be non-negative")
    if not math.isclose(sum(w.values()), 1.0, abs_tol=1e-9):
        raise ValueError(f"weights must sum to 1 (got {sum(w.values())})")
    return w


def load_weights(path: str | Path) -> dict[str, float]:
    return check_weights(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class QualityScores:
    s_depth: float
    s_breadth: float
    s_ecological: float
    s_rigor: float
    s_innovation: float
    s_density: float
    composite: float
    depth: DepthSignals
    breadth: BreadthSignals
    ecological: EcologicalSignals
    rigor: RigorSignals
    innovation: InnovationSignals
    n_sources: int
    word_count: int

    def scores(self) -> dict[str, float]:
        return {name: getattr(self, f"s_{name}") for name in SCORE_NAMES}

    def as_row(self) -> dict[str, float]:
        row: dict[str, float] = {}
        for group in (self.depth, self.breadth, self.ecological, self.rigor, self.innovation):
            row.update(asdict(group))
        row["n_sources"] = self.n_sources
        row["word_count"] = self.word_count
        row.update({f"s_{k}": v for k, v in self.scores().items()})
        row["composite"] = self.composite
        return row


def extract_signals(text: str, vocab: Vocabulary, config: ScoringConfig = DEFAULT_CONFIG):
    def c(category: str) -> int:
        return count_vocab_matches(text, category, vocab, config.mode(category))

    depth = DepthSignals(
        m_mech=c("mechanistic_terms"),
        m_causal=c("causal_connectives") + c("result_indicators") + c("mechanistic_verbs"),
        m_temporal=temporal_precision(text, vocab, config),
    )
    breadth = BreadthSignals(
        g_regions=c("geographic_regions"),
        i_types=c("intervention_types"),
        d_dims=c("biodiversity_dimensions"),
        e_services=c("ecosystem_services"),
        s_scales=c("spatial_scales") + count_area_measures(text, config.area_measure),
    )
    ecological = EcologicalSignals(c("conservation_terms"), c("climate_terms"), c("complexity_terms"))
    rigor = RigorSignals(c("statistical_terms"), count_citations(text), c("uncertainty_terms"))
    innovation = InnovationSignals(c("speculative_terms"), c("novelty_terms"), c("gap_terms"))
    return depth, breadth, ecological, rigor, innovation


def score_text(body: str, n_sources: int, word_count: int, vocab: Vocabulary | None = None,
               weights: Mapping[str, float] | None = None, config: ScoringConfig = DEFAULT_CONFIG) -> QualityScores:
    vocab = vocab or default_vocabulary()
    w = check_weights(weights or UNIFORM_WEIGHTS)
    text = strip_sources(body)
    depth, breadth, ecological, rigor, innovation = extract_signals(text, vocab, config)
    scores = {
        "depth": score_depth(depth),
        "breadth": score_breadth(breadth),
        "ecological": score_ecological(ecological),
        "rigor": score_rigor(rigor),
        "innovation": score_innovation(innovation),
        "density": score_density(n_sources, word_count) if word_count > 0 else 0.0,
    }
    composite = _unit(sum(w[k] * scores[k] for k in SCORE_NAMES))
    return QualityScores(
        *(scores[k] for k in SCORE_NAMES), composite,
        depth, breadth, ecological, rigor, innovation, n_sources, word_count,
    )


def score_report(record: ReportRecord, vocab: Vocabulary | None = None, weights: Mapping[str, float] | None = None,
                 config: ScoringConfig = DEFAULT_CONFIG) -> QualityScores:
    return score_text(record.body, record.n_sources, record.word_count, vocab, weights, config)
