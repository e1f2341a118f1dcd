"""Command-line entry point: ``deepresearch research|score|compare|plan``.

Settings resolve as flags > environment > JSON config file (``--config`` or
``DR_CONFIG``). Exit codes: 0 success, 2 usage, 3 provider failure, 4 internal.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import agents, corpus, quality, similarity
from .errors import BudgetExceeded, EmptyFrontier, ProviderError, SchemaViolation
from .providers import make_embedder, make_llm, make_search
from .workflow import ResearchParams, recursion_plan, run_deep_research

log = logging.getLogger("deepresearch")

EXIT_OK, EXIT_USAGE, EXIT_PROVIDER, EXIT_INTERNAL = 0, 2, 3, 4

METRIC_ALIASES = {"rouge": "rouge_l", "rouge_l": "rouge_l", "rouge-l": "rouge_l", "bertscore": "bertscore", "wmd": "wmd"}

DEFAULTS = {
    "model": "mock", "engine": "mock", "depth": 1, "breadth": 1, "out": ".", "seed": 0, "jobs": 1,
    "doc_limit": 10, "max_learnings": 3, "max_followups": 3, "metrics": "rouge", "pooling": "positional",
    "wmd_max_words": similarity.WMD_MAX_WORDS, "question": None, "feedback": None, "index": None,
    "trace": False, "embed_endpoint": None, "vocab": None, "weights": None,
}
ENV_KEYS = {"embed_endpoint": "DR_EMBED_ENDPOINT"}


class UsageError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    path = path or os.environ.get("DR_CONFIG")
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _resolve(args: argparse.Namespace) -> argparse.Namespace:
    merged = dict(DEFAULTS)
    merged.update(_load_config(args.config))
    for key, env in ENV_KEYS.items():
        if os.environ.get(env):
            merged[key] = os.environ[env]
    merged.update({k: v for k, v in vars(args).items() if v is not None})
    return argparse.Namespace(**merged)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deepresearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (default: $DR_CONFIG)")
        p.add_argument("--seed", type=int, help="seed for mock providers")
        p.add_argument("--jobs", type=int, help="worker threads")

    r = sub.add_parser("research", help="run the recursive research workflow and write a report")
    r.add_argument("--question")
    r.add_argument("--feedback")
    r.add_argument("--depth", type=int)
    r.add_argument("--breadth", type=int)
    r.add_argument("--model", help="LLM model id, or 'mock'")
    r.add_argument("--engine", help="search engine: orkg, firecrawl or mock")
    r.add_argument("--out", help="output directory")
    r.add_argument("--index", type=int, help="report index (default: lowest unused)")
    r.add_argument("--trace", action="store_true", default=None, help="also write a JSON-lines node trace")
    r.add_argument("--doc-limit", dest="doc_limit", type=int)
    r.add_argument("--max-learnings", dest="max_learnings", type=int)
    r.add_argument("--max-followups", dest="max_followups", type=int)
    common(r)

    s = sub.add_parser("score", help="quality scores for a directory of reports")
    s.add_argument("--input", required=True)
    s.add_argument("--vocab", help="JSON vocabulary overriding default categories")
    s.add_argument("--weights", help="JSON composite weights")
    s.add_argument("--out", help="output directory")
    common(s)

    c = sub.add_parser("compare", help="pairwise similarity matrices across configuration groups")
    c.add_argument("--input", required=True)
    c.add_argument("--metrics", help="comma list of rouge, bertscore, wmd")
    c.add_argument("--embed-endpoint", dest="embed_endpoint", help="embedder URL or stub[:hash|lattice|orthonormal]")
    c.add_argument("--out", help="output directory")
    c.add_argument("--pooling", choices=["positional", "pooled"])
    c.add_argument("--wmd-max-words", dest="wmd_max_words", type=int)
    common(c)

    p = sub.add_parser("plan", help="print the recursion schedule and worst-case cost")
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--breadth", type=int, required=True)
    p.add_argument("--doc-limit", dest="doc_limit", type=int)
    p.add_argument("--config")
    return parser


def _now() -> dt.datetime:
    # SOURCE_DATE_EPOCH pins manifest timestamps so reruns are byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        return dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc)
    return dt.datetime.now(dt.timezone.utc)


def cmd_research(a: argparse.Namespace) -> int:
    if not a.question or not str(a.question).strip():
        raise UsageError("--question is required")
    if a.depth < 1 or a.breadth < 1:
        raise UsageError("--depth and --breadth must be >= 1")
    out_dir = Path(a.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    index = a.index if a.index is not None else corpus.next_free_index(out_dir)
    try:
        filename = corpus.encode_filename(index, a.model, a.engine, a.depth, a.breadth)
    except corpus.MalformedName as exc:
        raise UsageError(str(exc)) from exc
    try:
        params = ResearchParams(
            question=a.question, feedback=a.feedback, depth=a.depth, breadth=a.breadth,
            model_id=a.model, engine_id=a.engine, per_query_doc_limit=a.doc_limit,
            max_learnings=a.max_learnings, max_followups=a.max_followups,
        )
        search = make_search(a.engine, seed=a.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    llm = make_llm(a.model, seed=a.seed, system_prompt=agents.system_prompt())

    started = _now()
    outcome = run_deep_research(params, llm, search, jobs=a.jobs)
    finished = _now()

    report_path = out_dir / filename
    report_path.write_text(outcome.report_markdown, encoding="utf-8")
    stem = report_path.with_suffix("")
    manifest = {
        "params": asdict(params),
        "started_at": started.isoformat(),
        "finished_at": finished.isoformat(),
        "output_path": str(report_path),
        "stats": asdict(outcome.stats),
        "provider_ids": {"llm": llm.provider_id, "search": search.provider_id},
    }
    Path(f"{stem}.manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    if a.trace:
        with open(f"{stem}.trace.jsonl", "w", encoding="utf-8") as fh:
            for rec in outcome.trace_records():
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    st = outcome.stats
    print(f"wrote {report_path}")
    print(f"queries={st.total_queries} documents={st.total_documents} "
          f"unique_urls={len(outcome.visited_urls)} learnings={len(outcome.learnings)} "
          f"per_level_breadth={st.per_level_breadth}")
    return EXIT_OK


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def cmd_score(a: argparse.Namespace) -> int:
    src = Path(a.input)
    if not src.is_dir():
        raise UsageError(f"--input {src} is not a directory")
    try:
        vocab = quality.Vocabulary.from_json(a.vocab) if a.vocab else quality.default_vocabulary()
        weights = quality.load_weights(a.weights) if a.weights else None
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    records = corpus.load_corpus(src)
    if not records:
        raise UsageError(f"no well-named reports in {src}")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)

    rows, by_config = [], {}
    for rec in records:
        qs = quality.score_report(rec, vocab, weights)
        row = {"file": rec.filename, "config": str(rec.label), "index": rec.index, **qs.as_row()}
        rows.append(row)
        by_config.setdefault(rec.label, []).append(qs)
    _write_rows(out / "scores.csv", rows)

    agg = []
    for label in sorted(by_config):
        items = by_config[label]
        row = {"config": str(label), "n": len(items)}
        for name in (*(f"s_{n}" for n in quality.SCORE_NAMES), "composite", "n_sources", "word_count"):
            vals = np.array([q.as_row()[name] for q in items], dtype=float)
            row[f"{name}_mean"] = float(vals.mean())
            row[f"{name}_std"] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        agg.append(row)
    _write_rows(out / "aggregate.csv", agg)
    print(f"scored {len(rows)} reports in {len(agg)} configurations -> {out / 'scores.csv'}, {out / 'aggregate.csv'}")
    return EXIT_OK


def cmd_compare(a: argparse.Namespace) -> int:
    src = Path(a.input)
    if not src.is_dir():
        raise UsageError(f"--input {src} is not a directory")
    metrics = []
    for name in str(a.metrics).split(","):
        name = name.strip().lower()
        if name not in METRIC_ALIASES:
            raise UsageError(f"unknown metric {name!r}")
        metrics.append(METRIC_ALIASES[name])
    embedder = None
    if any(m != "rouge_l" for m in metrics):
        try:
            embedder = make_embedder(a.embed_endpoint, seed=a.seed)
            embedder.ping()
        except (ValueError, ProviderError) as exc:
            log.error("embedder unavailable: %s", exc)
            return EXIT_PROVIDER
    groups = corpus.group_by_config(corpus.load_corpus(src))
    if not groups:
        raise UsageError(f"no well-named reports in {src}")
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    for metric in metrics:
        options = {}
        if metric == "bertscore":
            options["pooling"] = a.pooling
        if metric == "wmd":
            options["max_words"] = a.wmd_max_words
        mat = similarity.pairwise_matrix(groups, metric, embedder, jobs=a.jobs, **options)
        diag = np.diag(mat.values)
        present = np.diag(mat.pair_counts) > 0
        if present.any() and np.abs(diag[present] - 1.0).max() > 1e-9:
            log.error("%s diagonal is not 1.0: %s", metric, diag)
            return EXIT_INTERNAL
        for li, lj in mat.missing():
            log.warning("%s: no shared report indices between %s and %s", metric, li, lj)
        similarity.write_matrix_csv(out / f"{metric}_matrix.csv", mat)
        similarity.write_pair_counts_csv(out / f"{metric}_pairs.csv", mat)
        print(f"{metric}: {len(groups)}x{len(groups)} -> {out / (metric + '_matrix.csv')}")
    return EXIT_OK


def cmd_plan(a: argparse.Namespace) -> int:
    try:
        plan = recursion_plan(a.depth, a.breadth, a.doc_limit)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(json.dumps(asdict(plan)))
    return EXIT_OK


COMMANDS = {"research": cmd_research, "score": cmd_score, "compare": cmd_compare, "plan": cmd_plan}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        resolved = _resolve(args)
        return COMMANDS[args.command](resolved)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"deepresearch: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProviderError, SchemaViolation, EmptyFrontier, BudgetExceeded) as exc:
        where = getattr(exc, "node_path", None)
        print(f"deepresearch: provider failure{f' at node {where}' if where else ''}: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"deepresearch: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
