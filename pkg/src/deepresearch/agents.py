"""The four sub-agents: prompt construction plus structured-output parsing.

Every function here is stateless; given the same provider transcript it
returns the same value.
"""

from __future__ import annotations

import copy
import datetime as _dt
import json
import logging
import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import jsonschema

from .errors import EmptyFrontier, SchemaViolation
from .providers.base import Document, LlmProvider

log = logging.getLogger(__name__)

SCHEMA_IDS = ("serp_queries", "node_result", "report")
TEMPLATE_VERSION = "v1"
SCHEMA_RETRIES = 2
MAX_DOC_CHARS = 25_000

SOURCES_HEADING = "## Sources"


@dataclass(frozen=True)
class SerpQuery:
    query: str
    research_goal: str

    def __post_init__(self) -> None:
        if not self.query.strip() or not self.research_goal.strip():
            raise ValueError("SerpQuery needs a non-empty query and research goal")


@dataclass(frozen=True)
class NodeResult:
    learnings: list[str] = field(default_factory=list)
    followups: list[str] = field(default_factory=list)
    source_urls: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ReportPayload:
    reportMarkdown: str


@lru_cache(maxsize=None)
def load_schema(schema_id: str) -> dict:
    if schema_id not in SCHEMA_IDS:
        raise ValueError(f"unknown schema id {schema_id!r}")
    text = resources.files("deepresearch.assets.schemas").joinpath(f"{schema_id}.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def load_template(name: str, version: str = TEMPLATE_VERSION) -> str:
    return resources.files("deepresearch.assets.templates").joinpath(f"{name}.{version}.txt").read_text("utf-8")


def system_prompt(today: _dt.date | None = None) -> str:
    return load_template("system").format(today=(today or _dt.date.today()).isoformat())


def request_schema(schema_id: str, caps: Mapping[str, int] | None = None) -> dict:
    """Schema sent to the model: the validation schema plus ``maxItems`` hints."""
    schema = copy.deepcopy(load_schema(schema_id))
    for prop, cap in (caps or {}).items():
        schema["properties"][prop]["maxItems"] = int(cap)
    return schema


def _json_path(path: Sequence) -> str:
    out = "$"
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else f".{part}"
    return out


_FENCE = re.compile(r"^\s*```(?:json)?\s*\n(.*?)\n?```\s*$", re.S)


def _parse_json(raw: str):
    m = _FENCE.match(raw)
    text = m.group(1) if m else raw
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"not valid JSON ({exc.msg})", path="$", raw=raw) from exc


def _truncate(items: list, cap: int | None, what: str) -> list:
    if cap is not None and len(items) > cap:
        log.warning("model returned %d %s, keeping the first %d", len(items), what, cap)
        return items[:cap]
    return items


def validate_structured_output(raw: str, schema_id: str, *, caps: Mapping[str, int] | None = None):
    """Parse and type-check raw model output.

    Returns ``list[SerpQuery]``, ``NodeResult`` (without ``source_urls``) or
    ``ReportPayload`` depending on ``schema_id``. Arrays longer than their cap
    in ``caps`` are truncated with a logged warning. Raises ``SchemaViolation``
    carrying a JSON path to the first offending field.
    """
    schema = load_schema(schema_id)
    data = _parse_json(raw)
    validator = jsonschema.Draft202012Validator(schema)
    error = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if error is not None:
        raise SchemaViolation(error.message, path=_json_path(error.absolute_path), raw=raw)
    caps = caps or {}
    if schema_id == "serp_queries":
        items = _truncate(data["queries"], caps.get("queries"), "queries")
        return [SerpQuery(q["query"].strip(), q["researchGoal"].strip()) for q in items]
    if schema_id == "node_result":
        return NodeResult(
            learnings=[s.strip() for s in _truncate(data["learnings"], caps.get("learnings"), "learnings")],
            followups=[s.strip() for s in _truncate(data["followUpQuestions"], caps.get("followUpQuestions"), "follow-up questions")],
        )
    return ReportPayload(reportMarkdown=data["reportMarkdown"])


def _complete(llm: LlmProvider, prompt: str, schema_id: str, caps: Mapping[str, int] | None = None,
              retries: int = SCHEMA_RETRIES):
    schema = request_schema(schema_id, caps)
    attempt_prompt = prompt
    for attempt in range(retries + 1):
        raw = llm.complete_structured(attempt_prompt, schema_id, schema)
        try:
            return validate_structured_output(raw, schema_id, caps=caps)
        except SchemaViolation as exc:
            if attempt == retries:
                raise
            log.warning("schema violation from model (%s); re-prompting", exc)
            attempt_prompt = (
                f"{prompt}\n\nYour previous answer was rejected: {exc}. "
                "Reply again with only a JSON object that satisfies the schema."
            )
    raise AssertionError("unreachable")


def _learnings_block(learnings: Sequence[str]) -> str:
    return "\n".join(f"<learning>\n{item}\n</learning>" for item in learnings)


def generate_serp_queries(context: str, n: int, llm: LlmProvider, *, learnings: Sequence[str] = ()) -> list[SerpQuery]:
    """Ask the model for up to ``n`` search queries, each with a research goal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not context.strip():
        raise ValueError("context must be non-empty")
    prompt = load_template("serp_queries").format(context=context, n=n, learnings=_learnings_block(learnings))
    queries = _complete(llm, prompt, "serp_queries", {"queries": n})
    if not queries:
        raise EmptyFrontier("model produced no search queries")
    return queries


def _documents_block(documents: Sequence[Document]) -> str:
    blocks = []
    for doc in documents:
        text = doc.body if doc.title is None else f"{doc.title}\n\n{doc.body}"
        blocks.append(f"<content>\n{text[:MAX_DOC_CHARS]}\n</content>")
    return "\n".join(blocks)


def summarize_results(query: SerpQuery, documents: Sequence[Document], max_learnings: int, max_followups: int,
                      llm: LlmProvider) -> NodeResult:
    """Distil retrieved documents into learnings and follow-up questions.

    ``source_urls`` keeps every input URL in order, duplicates included.
    """
    if not documents:
        return NodeResult()
    prompt = load_template("summarize").format(
        context=query.query, documents=_documents_block(documents),
        n_learnings=max_learnings, n_followups=max_followups,
    )
    parsed = _complete(llm, prompt, "node_result", {"learnings": max_learnings, "followUpQuestions": max_followups})
    return NodeResult(parsed.learnings, parsed.followups, [d.url for d in documents])


_SOURCES_LINE = re.compile(r"^(#{1,6})[ \t]*sources[ \t]*#*[ \t]*$", re.I | re.M)


def generate_report(original_prompt: str, learnings: Sequence[str], visited_urls: Sequence[str],
                    llm: LlmProvider) -> ReportPayload:
    """Write the final Markdown report and append the Sources section.

    Any "Sources" heading the model wrote itself is renamed so the appended
    section is the only one, and it is always last.
    """
    if not learnings:
        raise ValueError("generate_report needs at least one learning")
    prompt = load_template("report").format(context=original_prompt, learnings=_learnings_block(learnings))
    payload = _complete(llm, prompt, "report")
    body = _SOURCES_LINE.sub(lambda m: f"{m.group(1)} Sources cited in text", payload.reportMarkdown).rstrip()
    urls = list(dict.fromkeys(visited_urls))
    section = "\n".join([SOURCES_HEADING, ""] + [f"- {u}" for u in urls])
    return ReportPayload(reportMarkdown=f"{body}\n\n{section}\n")
