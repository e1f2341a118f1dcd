"""Report files on disk: filename codec, Sources parsing, grouping."""

from __future__ import annotations

import csv
import logging
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import MalformedName

log = logging.getLogger(__name__)

_NAME_RE = re.compile(r"^(\d+)_([^_/\\]+)_([^_/\\]+)_d(\d+)_b(\d+)\.md$")
_IDENT_RE = re.compile(r"^[^_/\\\s]+$")


class ConfigLabel(NamedTuple):
    model: str
    engine: str
    depth: int
    breadth: int

    def __str__(self) -> str:
        return f"{self.model}_{self.engine}_d{self.depth}_b{self.breadth}"


class ReportName(NamedTuple):
    index: int
    model: str
    engine: str
    depth: int
    breadth: int

    @property
    def label(self) -> ConfigLabel:
        return ConfigLabel(self.model, self.engine, self.depth, self.breadth)


def encode_filename(index: int, model: str, engine: str, depth: int, breadth: int) -> str:
    if index < 0 or depth < 1 or breadth < 1:
        raise MalformedName(f"invalid numeric fields: index={index}, depth={depth}, breadth={breadth}")
    for what, ident in (("model", model), ("engine", engine)):
        if not _IDENT_RE.match(ident):
            raise MalformedName(f"{what} identifier {ident!r} must be non-empty without underscores")
    return f"{index}_{model}_{engine}_d{depth}_b{breadth}.md"


def parse_filename(name: str) -> ReportName:
    m = _NAME_RE.match(Path(name).name)
    if not m:
        raise MalformedName(f"{name!r} does not match <index>_<model>_<engine>_d<depth>_b<breadth>.md")
    idx, model, engine, depth, breadth = m.groups()
    return ReportName(int(idx), model, engine, int(depth), int(breadth))


_HEADING_RE = re.compile(r"^[ ]{0,3}(#{1,6})[ \t]+(.*?)[ \t]*#*[ \t]*$")
_URL_RE = re.compile(r"https?://[^\s<>()\[\]\"']+(?:\([^\s<>()]*\)[^\s<>()\[\]\"']*)*")


def _sources_span(lines: list[str]) -> tuple[int, int] | None:
    """Line span of the last heading titled "Sources" and its body."""
    start = None
    for i, line in enumerate(lines):
        m = _HEADING_RE.match(line)
        if m and m.group(2).strip().rstrip(":").strip().lower() == "sources":
            start = i
    if start is None:
        return None
    level = len(_HEADING_RE.match(lines[start]).group(1))
    end = len(lines)
    for j in range(start + 1, len(lines)):
        m = _HEADING_RE.match(lines[j])
        if m and len(m.group(1)) <= level:
            end = j
            break
    return start, end


def extract_sources(body: str) -> list[str]:
    """URLs listed under the final Sources heading, in order.

    Accepts bullet items, numbered items, bare URLs and Markdown links;
    only the first URL on each line is taken.
    """
    lines = body.splitlines()
    span = _sources_span(lines)
    if span is None:
        return []
    out = []
    for line in lines[span[0] + 1 : span[1]]:
        m = _URL_RE.search(line)
        if m:
            out.append(m.group(0).rstrip(".,;"))
    return out


def strip_sources(body: str) -> str:
    lines = body.splitlines()
    span = _sources_span(lines)
    if span is None:
        return body
    return "\n".join(lines[: span[0]] + lines[span[1] :])


def word_count(body: str) -> int:
    """Whitespace-delimited words, the Sources section excluded."""
    return len(strip_sources(body).split())


@dataclass(frozen=True)
class ReportRecord:
    index: int
    model: str
    engine: str
    depth: int
    breadth: int
    body: str
    sources: list[str] = field(default_factory=list)
    word_count: int = 0
    path: Path | None = field(default=None, compare=False)

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    @property
    def label(self) -> ConfigLabel:
        return ConfigLabel(self.model, self.engine, self.depth, self.breadth)

    @property
    def prose(self) -> str:
        return strip_sources(self.body)

    @property
    def filename(self) -> str:
        return encode_filename(self.index, self.model, self.engine, self.depth, self.breadth)

    @classmethod
    def from_body(cls, name: ReportName, body: str, path: Path | None = None) -> ReportRecord:
        return cls(*name, body=body, sources=extract_sources(body), word_count=word_count(body), path=path)


def read_report(path: str | Path) -> ReportRecord:
    path = Path(path)
    return ReportRecord.from_body(parse_filename(path.name), path.read_text(encoding="utf-8"), path)


def write_report(directory: str | Path, record: ReportRecord) -> Path:
    out = Path(directory) / record.filename
    out.write_text(record.body, encoding="utf-8")
    return out


def load_corpus(directory: str | Path, *, recursive: bool = False) -> list[ReportRecord]:
    """All well-named ``.md`` reports in ``directory``; others are logged and skipped."""
    records = []
    seen: set[ReportName] = set()
    paths = Path(directory).rglob("*.md") if recursive else Path(directory).glob("*.md")
    for path in sorted(paths):
        try:
            rec = read_report(path)
        except MalformedName as exc:
            log.warning("skipping %s: %s", path.name, exc)
            continue
        except (OSError, UnicodeDecodeError) as exc:
            log.warning("skipping unreadable %s: %s", path.name, exc)
            continue
        key = ReportName(rec.index, rec.model, rec.engine, rec.depth, rec.breadth)
        if key in seen:
            log.warning("skipping duplicate report %s", path.name)
            continue
        seen.add(key)
        records.append(rec)
    return records


def next_free_index(directory: str | Path) -> int:
    used = set()
    for path in Path(directory).glob("*.md"):
        try:
            used.add(parse_filename(path.name).index)
        except MalformedName:
            continue
    k = 1
    while k in used:
        k += 1
    return k


@dataclass
class ConfigGroup:
    label: ConfigLabel
    records: dict[int, ReportRecord] = field(default_factory=dict)

    def add(self, record: ReportRecord) -> None:
        if record.label != self.label:
            raise ValueError(f"record {record.filename} does not belong to group {self.label}")
        self.records[record.index] = record


def group_by_config(records: Iterable[ReportRecord]) -> list[ConfigGroup]:
    """Groups ordered by (model, engine, depth, breadth)."""
    groups: dict[ConfigLabel, ConfigGroup] = {}
    for rec in records:
        groups.setdefault(rec.label, ConfigGroup(rec.label)).add(rec)
    return [groups[k] for k in sorted(groups)]


def align_groups(a: ConfigGroup, b: ConfigGroup) -> list[tuple[int, ReportRecord, ReportRecord]]:
    shared = sorted(a.records.keys() & b.records.keys())
    return [(k, a.records[k], b.records[k]) for k in shared]


MANIFEST_FIELDS = ["index", "model", "engine", "depth", "breadth", "n_sources", "word_count"]


def write_manifest(path: str | Path, records: Iterable[ReportRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for r in records:
            writer.writerow([r.index, r.model, r.engine, r.depth, r.breadth, r.n_sources, r.word_count])
