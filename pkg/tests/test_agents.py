import json
import logging

import pytest
from hypothesis import given
from hypothesis import strategies as st

from deepresearch import agents
from deepresearch.agents import NodeResult, ReportPayload, SerpQuery
from deepresearch.errors import EmptyFrontier, SchemaViolation
from deepresearch.providers import MockLlm, ScriptedLlm
from deepresearch.providers.base import Document


def docs(n, dup=None):
    out = [Document(body=f"Abstract number {i}.", url=f"https://ex.org/{i}", provider="t", title=f"T{i}") for i in range(n)]
    if dup is not None:
        out.append(out[dup])
    return out


Q = SerpQuery("impact of invasive species on native grassland biodiversity", "Map invasion impacts.")


# --- validate_structured_output -------------------------------------------

def test_valid_report_payload():
    assert agents.validate_structured_output('{"reportMarkdown": "# R"}', "report") == ReportPayload("# R")


def test_report_missing_field_fails_at_root():
    with pytest.raises(SchemaViolation) as info:
        agents.validate_structured_output("{}", "report")
    assert info.value.path == "$"
    assert "reportMarkdown" in str(info.value)


def test_report_rejects_extra_fields():
    with pytest.raises(SchemaViolation):
        agents.validate_structured_output('{"reportMarkdown": "x", "notes": 1}', "report")


def test_extra_fields_tolerated_elsewhere():
    raw = json.dumps({"queries": [{"query": "a", "researchGoal": "b", "score": 3}], "chatter": True})
    assert agents.validate_structured_output(raw, "serp_queries") == [SerpQuery("a", "b")]


def test_violation_path_points_at_field():
    raw = json.dumps({"queries": [{"query": "a", "researchGoal": "b"}, {"query": "c", "researchGoal": 7}]})
    with pytest.raises(SchemaViolation) as info:
        agents.validate_structured_output(raw, "serp_queries")
    assert info.value.path == "$.queries[1].researchGoal"


def test_blank_strings_rejected():
    with pytest.raises(SchemaViolation):
        agents.validate_structured_output('{"queries": [{"query": "  ", "researchGoal": "g"}]}', "serp_queries")


def test_invalid_json():
    with pytest.raises(SchemaViolation) as info:
        agents.validate_structured_output("not json", "node_result")
    assert info.value.path == "$"


def test_code_fence_stripped():
    raw = '```json\n{"learnings": ["x"], "followUpQuestions": []}\n```'
    assert agents.validate_structured_output(raw, "node_result") == NodeResult(["x"], [])


def test_truncates_overlong_serp_list(caplog):
    raw = json.dumps({"queries": [{"query": f"q{i}", "researchGoal": "g"} for i in range(5)]})
    with caplog.at_level(logging.WARNING):
        out = agents.validate_structured_output(raw, "serp_queries", caps={"queries": 3})
    assert [q.query for q in out] == ["q0", "q1", "q2"]
    assert "keeping the first 3" in caplog.text


def test_unknown_schema_id():
    with pytest.raises(ValueError):
        agents.load_schema("nope")


def test_request_schema_adds_caps_without_mutating_cache():
    s = agents.request_schema("node_result", {"learnings": 2})
    assert s["properties"]["learnings"]["maxItems"] == 2
    assert "maxItems" not in agents.load_schema("node_result")["properties"]["learnings"]


# --- generate_serp_queries ------------------------------------------------

def test_generate_serp_queries_scripted_example():
    raw = json.dumps({"queries": [{"query": "impact of invasive species on native grassland biodiversity",
                                   "researchGoal": "Quantify impacts."}]})
    llm = ScriptedLlm({"serp_queries": [raw]})
    out = agents.generate_serp_queries("What are the effects of invasive species in grasslands?", 1, llm)
    assert out == [SerpQuery("impact of invasive species on native grassland biodiversity", "Quantify impacts.")]
    assert "up to 1 search-engine" in llm.prompts[0][1]


@pytest.mark.parametrize("n", [1, 3, 7])
def test_mock_returns_exactly_n(n):
    assert len(agents.generate_serp_queries("ctx", n, MockLlm(0))) == n


def test_default_three_with_chatty_model():
    raw = json.dumps({"queries": [{"query": f"q{i}", "researchGoal": "g"} for i in range(9)]})
    out = agents.generate_serp_queries("ctx", 3, ScriptedLlm({"serp_queries": [raw]}))
    assert len(out) == 3


def test_serp_empty_list_is_empty_frontier():
    with pytest.raises(EmptyFrontier):
        agents.generate_serp_queries("ctx", 2, ScriptedLlm({"serp_queries": ['{"queries": []}']}))


def test_serp_preconditions():
    with pytest.raises(ValueError):
        agents.generate_serp_queries("ctx", 0, MockLlm(0))
    with pytest.raises(ValueError):
        agents.generate_serp_queries("  ", 1, MockLlm(0))


def test_retry_with_corrective_prompt_then_success():
    good = json.dumps({"queries": [{"query": "a", "researchGoal": "b"}]})
    llm = ScriptedLlm({"serp_queries": ["garbage", '{"queries": 3}', good]})
    assert agents.generate_serp_queries("ctx", 1, llm) == [SerpQuery("a", "b")]
    assert len(llm.prompts) == 3
    assert "previous answer was rejected" in llm.prompts[1][1]


def test_retries_are_bounded():
    llm = ScriptedLlm({"serp_queries": ["bad"] * 5})
    with pytest.raises(SchemaViolation):
        agents.generate_serp_queries("ctx", 1, llm)
    assert len(llm.prompts) == 1 + agents.SCHEMA_RETRIES


def test_learnings_are_passed_to_prompt():
    llm = ScriptedLlm({"serp_queries": [json.dumps({"queries": [{"query": "a", "researchGoal": "b"}]})]})
    agents.generate_serp_queries("ctx", 1, llm, learnings=["Fire restores prairie."])
    assert "<learning>\nFire restores prairie.\n</learning>" in llm.prompts[0][1]


# --- summarize_results ----------------------------------------------------

def test_summarize_empty_short_circuits():
    llm = ScriptedLlm({})
    assert agents.summarize_results(Q, [], 3, 3, llm) == NodeResult([], [], [])
    assert llm.prompts == []


def test_summarize_ten_docs():
    res = agents.summarize_results(Q, docs(10), 3, 3, MockLlm(0))
    assert len(res.learnings) == 3 and len(res.followups) == 3
    assert res.source_urls == [f"https://ex.org/{i}" for i in range(10)]


def test_summarize_keeps_duplicate_urls():
    res = agents.summarize_results(Q, docs(3, dup=1), 3, 3, MockLlm(0))
    assert res.source_urls == ["https://ex.org/0", "https://ex.org/1", "https://ex.org/2", "https://ex.org/1"]


def test_summarize_prompt_contains_documents():
    llm = ScriptedLlm({"node_result": ['{"learnings": ["l"], "followUpQuestions": ["f"]}']})
    agents.summarize_results(Q, docs(2), 3, 3, llm)
    prompt = llm.prompts[0][1]
    assert Q.query in prompt and "Abstract number 1." in prompt and "T0" in prompt


def test_summarize_truncates_long_documents():
    big = Document(body="x" * (agents.MAX_DOC_CHARS + 500), url="https://ex.org/big", provider="t")
    llm = ScriptedLlm({"node_result": ['{"learnings": ["l"], "followUpQuestions": []}']})
    agents.summarize_results(Q, [big], 3, 3, llm)
    assert "x" * agents.MAX_DOC_CHARS in llm.prompts[0][1]
    assert "x" * (agents.MAX_DOC_CHARS + 1) not in llm.prompts[0][1]


@given(st.integers(0, 12), st.integers(0, 12), st.integers(1, 4), st.integers(1, 4))
def test_caps_hold_for_any_output(n_learn, n_follow, max_l, max_f):
    raw = json.dumps({"learnings": [f"l{i}" for i in range(n_learn)],
                      "followUpQuestions": [f"f{i}" for i in range(n_follow)]})
    res = agents.summarize_results(Q, docs(2), max_l, max_f, ScriptedLlm({"node_result": [raw]}))
    assert len(res.learnings) == min(n_learn, max_l)
    assert len(res.followups) == min(n_follow, max_f)


# --- generate_report ------------------------------------------------------

def _report(body):
    return ScriptedLlm({"report": [json.dumps({"reportMarkdown": body})]})


def test_report_appends_sources_last():
    out = agents.generate_report("prompt", ["one learning"], ["https://u1.org"], _report("# Title\n\nText."))
    assert out.reportMarkdown.endswith("## Sources\n\n- https://u1.org\n")


def test_report_empty_sources():
    out = agents.generate_report("prompt", ["l"], [], _report("# T"))
    assert out.reportMarkdown.rstrip().endswith("## Sources")
    assert out.reportMarkdown.count("## Sources") == 1


def test_report_dedups_urls():
    out = agents.generate_report("p", ["l"], ["https://u1.org", "https://u2.org", "https://u1.org"], _report("# T"))
    tail = out.reportMarkdown.split("## Sources", 1)[1]
    assert tail.split() == ["-", "https://u1.org", "-", "https://u2.org"]


def test_llm_written_sources_heading_is_renamed():
    body = "# T\n\n## Sources\n\n- https://made-up.org\n\n### sources\n"
    out = agents.generate_report("p", ["l"], ["https://real.org"], _report(body))
    md = out.reportMarkdown
    lines = [line for line in md.splitlines() if line.lstrip("#").strip().lower() == "sources"]
    assert lines == ["## Sources"]
    assert md.rindex("## Sources") > md.index("https://made-up.org")


def test_report_needs_learnings():
    with pytest.raises(ValueError):
        agents.generate_report("p", [], [], MockLlm(0))


def test_report_prompt_lists_learnings():
    llm = _report("# T")
    agents.generate_report("Original question?", ["First.", "Second."], [], llm)
    prompt = llm.prompts[0][1]
    assert "Original question?" in prompt
    assert prompt.index("First.") < prompt.index("Second.")


def test_system_prompt_has_date():
    import datetime as dt
    assert "2024-05-01" in agents.system_prompt(dt.date(2024, 5, 1))
