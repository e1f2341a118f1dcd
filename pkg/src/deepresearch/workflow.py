"""Recursive explore / summarise / refine engine."""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from . import agents
from .agents import NodeResult, SerpQuery
from .errors import BudgetExceeded, EmptyFrontier, ProviderError, SchemaViolation
from .providers.base import LlmProvider, SearchProvider

log = logging.getLogger(__name__)

DEFAULT_MAX_QUERIES = 512
DEFAULT_MAX_DOCUMENTS = 5120


@dataclass(frozen=True)
class ResearchParams:
    question: str
    depth: int
    breadth: int
    feedback: str | None = None
    model_id: str = "mock"
    engine_id: str = "mock"
    per_query_doc_limit: int = 10
    max_learnings: int = 3
    max_followups: int = 3
    max_queries: int = DEFAULT_MAX_QUERIES
    max_documents: int = DEFAULT_MAX_DOCUMENTS

    def __post_init__(self) -> None:
        if not self.question or not self.question.strip():
            raise ValueError("question must be non-empty")
        for name in ("depth", "breadth", "per_query_doc_limit", "max_learnings", "max_followups"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def initial_prompt(self) -> str:
        if self.feedback:
            return f"{self.question}\n\nAdditional context from the user:\n{self.feedback}"
        return self.question


@dataclass
class QueryNode:
    level: int
    path: str
    query: SerpQuery
    result: NodeResult | None = None
    n_docs: int = 0
    children: list[QueryNode] = field(default_factory=list)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class ResearchStats:
    total_queries: int
    total_documents: int
    per_level_breadth: list[int]


@dataclass(frozen=True)
class ResearchOutcome:
    report_markdown: str
    learnings: list[str]
    visited_urls: list[str]
    stats: ResearchStats
    tree: list[QueryNode] = field(default_factory=list, repr=False)

    def trace_records(self) -> list[dict]:
        records = []
        for root in self.tree:
            for node in root.walk():
                res = node.result or NodeResult()
                records.append({
                    "path": node.path,
                    "level": node.level,
                    "query": node.query.query,
                    "research_goal": node.query.research_goal,
                    "n_docs": node.n_docs,
                    "learnings": res.learnings,
                    "followups": res.followups,
                })
        return records

    def to_json(self) -> str:
        return json.dumps({
            "report_markdown": self.report_markdown,
            "learnings": self.learnings,
            "visited_urls": self.visited_urls,
            "stats": asdict(self.stats),
            "trace": self.trace_records(),
        }, sort_keys=True, ensure_ascii=False)


def next_breadth(b: int) -> int:
    """Query count one level down: ``b // 2``, never below 1."""
    if b < 1:
        raise ValueError("breadth must be >= 1")
    return max(1, b // 2)


@dataclass(frozen=True)
class RecursionPlan:
    per_level_breadth: list[int]
    worst_case_queries: int
    worst_case_documents: int


def recursion_plan(depth: int, breadth: int, per_query_doc_limit: int = 10) -> RecursionPlan:
    """Cost preview assuming every node spends its full query budget."""
    if depth < 1 or breadth < 1:
        raise ValueError("depth and breadth must be >= 1")
    widths = [breadth]
    for _ in range(depth - 1):
        widths.append(next_breadth(widths[-1]))
    total = 0
    nodes = 1
    for w in widths:
        nodes *= w
        total += nodes
    return RecursionPlan(widths, total, total * per_query_doc_limit)


def _child_context(query: SerpQuery, followups: list[str]) -> str:
    lines = [f"Previous research goal: {query.research_goal}"]
    if followups:
        lines.append("Follow-up research directions:")
        lines += [f"- {q}" for q in followups]
    return "\n".join(lines)


class _Run:
    def __init__(self, params: ResearchParams, llm: LlmProvider, search: SearchProvider, jobs: int,
                 on_node: Callable[[QueryNode], None] | None) -> None:
        self.params = params
        self.llm = llm
        self.search = search
        self.jobs = max(1, jobs)
        self.on_node = on_node
        self.learnings: list[str] = []
        self.urls: dict[str, None] = {}
        self.n_queries = 0
        self.n_docs = 0
        self.pool = ThreadPoolExecutor(self.jobs) if self.jobs > 1 else None

    def _fetch(self, query: SerpQuery, path: str) -> tuple[int, NodeResult]:
        p = self.params
        try:
            docs = self.search.search(query.query, p.per_query_doc_limit)[: p.per_query_doc_limit]
            result = agents.summarize_results(query, docs, p.max_learnings, p.max_followups, self.llm)
        except (ProviderError, SchemaViolation) as exc:
            exc.node_path = path
            raise
        return len(docs), result

    def explore(self, context: str, breadth: int, level: int, prefix: str) -> list[QueryNode]:
        try:
            queries = agents.generate_serp_queries(context, breadth, self.llm, learnings=list(self.learnings))
        except EmptyFrontier:
            if level == 1:
                raise
            log.info("node %s produced no queries; pruning", prefix)
            return []
        except (ProviderError, SchemaViolation) as exc:
            exc.node_path = prefix or "root"
            raise
        if self.n_queries + len(queries) > self.params.max_queries:
            raise BudgetExceeded(f"query cap {self.params.max_queries} reached at node {prefix or 'root'}")
        self.n_queries += len(queries)
        paths = [f"{prefix}.{i + 1}" if prefix else str(i + 1) for i in range(len(queries))]

        # siblings' search + summarise do not depend on each other's learnings,
        # so they can run ahead; accumulation and descent stay in tree order
        if self.pool is not None and len(queries) > 1:
            fetched = list(self.pool.map(self._fetch, queries, paths))
        else:
            fetched = [self._fetch(q, path) for q, path in zip(queries, paths)]

        nodes = []
        for query, path, (n_docs, result) in zip(queries, paths, fetched):
            self.n_docs += n_docs
            if self.n_docs > self.params.max_documents:
                raise BudgetExceeded(f"document cap {self.params.max_documents} reached at node {path}")
            node = QueryNode(level=level, path=path, query=query, result=result, n_docs=n_docs)
            self.learnings.extend(result.learnings)
            self.urls.update(dict.fromkeys(result.source_urls))
            if self.on_node is not None:
                self.on_node(node)
            if level < self.params.depth:
                node.children = self.explore(
                    _child_context(query, result.followups), next_breadth(breadth), level + 1, path
                )
            nodes.append(node)
        return nodes

    def close(self) -> None:
        if self.pool is not None:
            self.pool.shutdown(wait=True)


def _realized_breadth(tree: list[QueryNode]) -> list[int]:
    """Widest sibling group actually generated at each level."""
    widths = []
    frontier = [tree]
    while frontier and any(frontier):
        widths.append(max(len(group) for group in frontier))
        frontier = [node.children for group in frontier for node in group]
    return widths


def run_deep_research(params: ResearchParams, llm: LlmProvider, search: SearchProvider, *, jobs: int = 1,
                      on_node: Callable[[QueryNode], None] | None = None) -> ResearchOutcome:
    """Run the full query tree, then write the report.

    Level 1 issues ``params.breadth`` queries; every node below spawns
    ``next_breadth`` of its parent's count until ``params.depth`` levels
    exist. Learnings accumulate in depth-first, left-to-right order, and each
    child query generation sees every learning gathered so far.
    """
    run = _Run(params, llm, search, jobs, on_node)
    try:
        tree = run.explore(params.initial_prompt, params.breadth, 1, "")
    finally:
        run.close()
    if not run.learnings:
        raise EmptyFrontier("research produced no learnings; nothing to report")
    visited = list(run.urls)
    try:
        report = agents.generate_report(params.initial_prompt, run.learnings, visited, llm)
    except (ProviderError, SchemaViolation) as exc:
        exc.node_path = "report"
        raise
    stats = ResearchStats(run.n_queries, run.n_docs, _realized_breadth(tree))
    return ResearchOutcome(report.reportMarkdown, list(run.learnings), visited, stats, tree)
