import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepresearch import similarity
from deepresearch.corpus import ConfigGroup, ConfigLabel, ReportName, ReportRecord
from deepresearch.errors import EmptyText
from deepresearch.providers import HashEmbedder, LatticeEmbedder, OrthonormalEmbedder

from oracles import lcs_brute

tokens = st.lists(st.sampled_from(list("abcd")), max_size=12)


# --- ROUGE-L --------------------------------------------------------------

@pytest.mark.parametrize("text,expected", [
    ("Grasslands are grazed", ["grassland", "ar", "graze"]),
    ("", []),
    ("cat, CAT!", ["cat", "cat"]),
])
def test_tokenize_for_rouge(text, expected):
    assert similarity.tokenize_for_rouge(text) == expected


def test_rouge_worked_example():
    r = similarity.rouge_l_f1("the cat sat on the mat".split(), "the cat lay on the mat".split())
    assert r.lcs_length == 5
    assert r.precision == r.recall == 5 / 6
    assert r.f1 == pytest.approx(5 / 6)


def test_rouge_conventions():
    assert similarity.rouge_l_f1([], []).f1 == 1.0
    assert similarity.rouge_l_f1(["a"], []).f1 == 0.0
    assert similarity.rouge_l_f1(["a", "b"], ["c", "d"]).f1 == 0.0
    assert similarity.rouge_l_f1(list("abc"), list("abc")).f1 == 1.0


@given(tokens, tokens)
def test_rouge_matches_brute_force_and_swaps(a, b):
    r = similarity.rouge_l_f1(a, b)
    s = similarity.rouge_l_f1(b, a)
    if a and b:
        assert r.lcs_length == lcs_brute(a, b) <= min(len(a), len(b))
    assert r.f1 == s.f1
    assert (r.precision, r.recall) == (s.recall, s.precision)


# --- chunking -------------------------------------------------------------

def _words(n):
    return " ".join(f"w{i}" for i in range(n))


@pytest.mark.parametrize("n,sizes", [(300, [300]), (1020, [510, 510]), (1021, [510, 510, 1]), (0, [])])
def test_chunk_text(n, sizes):
    chunks = similarity.chunk_text(_words(n))
    assert [len(c) for c in chunks] == sizes
    assert sum(chunks, []) == _words(n).split()


def test_chunk_rejects_zero():
    with pytest.raises(ValueError):
        similarity.chunk_text("a", 0)


# --- BERTScore ------------------------------------------------------------

def test_bertscore_identity_any_embedder():
    text = "Fire regimes shape savanna tree cover. " * 40
    for emb in (HashEmbedder(), LatticeEmbedder(), OrthonormalEmbedder()):
        assert similarity.bertscore_f1(text, text, emb) == 1.0


def test_bertscore_orthonormal_disjoint_zero():
    emb = OrthonormalEmbedder()
    assert similarity.bertscore_f1("alpha beta gamma", "delta epsilon", emb) == 0.0


def test_bertscore_empty_conventions():
    emb = LatticeEmbedder()
    assert similarity.bertscore_f1("", "", emb) == 1.0
    assert similarity.bertscore_f1("", "soil", emb) == 0.0
    assert similarity.bertscore_f1("soil", "", emb) == 0.0


def test_bertscore_hand_vectors():
    # a = [x, y], b = [x]: precision (1 + 0)/2, recall 1
    emb = OrthonormalEmbedder()
    res = similarity.bertscore("x y", "x", emb)
    assert (res.precision, res.recall) == (0.5, 1.0)
    assert res.f1 == pytest.approx(2 / 3)


@settings(max_examples=60)
@given(st.lists(st.sampled_from(["soil", "fire", "bee", "moss", "rain", "."]), min_size=1, max_size=30),
       st.lists(st.sampled_from(["soil", "fire", "bee", "moss", "rain", "."]), min_size=1, max_size=30))
def test_bertscore_swap_symmetry(a, b):
    emb = HashEmbedder(dim=16)
    x, y = " ".join(a), " ".join(b)
    r, s = similarity.bertscore(x, y, emb), similarity.bertscore(y, x, emb)
    assert r.precision == pytest.approx(s.recall, abs=1e-12)
    assert r.recall == pytest.approx(s.precision, abs=1e-12)
    assert r.f1 == pytest.approx(s.f1, abs=1e-12)


def test_bertscore_positional_chunk_pairs():
    emb = OrthonormalEmbedder(dim=4096)
    a = _words(1020)
    b = _words(510)
    res = similarity.bertscore(a, b, emb)
    assert res.n_chunk_pairs == 1 and res.f1 == 1.0
    pooled = similarity.bertscore(a, b, emb, pooling="pooled")
    assert pooled.precision == 0.5 and pooled.recall == 1.0
    with pytest.raises(ValueError):
        similarity.bertscore(a, b + " extra", emb, pooling="diagonal")


# --- WMD ------------------------------------------------------------------

def test_wmd_identity_and_empty():
    emb = HashEmbedder()
    text = "Grazing reduces tall grass cover and favours forbs."
    assert similarity.wmd_similarity(text, text, emb) == 1.0
    assert similarity.wmd_similarity("", "", emb) == 1.0
    with pytest.raises(EmptyText):
        similarity.wmd_similarity("", "soil moss", emb)
    with pytest.raises(EmptyText):
        similarity.wmd_similarity("the and of", "soil", emb)  # only stopwords


def test_wmd_single_words_is_cosine():
    emb = HashEmbedder(dim=32, seed=2)
    hw, hv = emb.embed_words(["soil", "moss"])
    assert similarity.wmd_similarity("soil", "moss", emb) == pytest.approx(float(hw @ hv), abs=1e-12)


def test_word_distribution_order_and_cap():
    words, w = similarity.word_distribution("b a b c a b d", stopwords=frozenset(), max_words=3)
    assert words == ["b", "a", "c"]
    assert w.tolist() == pytest.approx([3 / 6, 2 / 6, 1 / 6])
    words, _ = similarity.word_distribution("The soil and the moss")
    assert words == ["soil", "moss"]


def test_cost_matrix_properties():
    emb = HashEmbedder()
    wa, wb = ["soil", "moss"], ["moss", "fern", "soil"]
    C = similarity.word_cost_matrix(wa, emb.embed_words(wa), wb, emb.embed_words(wb))
    assert C[0, 2] == 0.0 and C[1, 0] == 0.0
    assert (C >= 0).all() and (C <= 2).all()


def _nw_corner_cost(a, b, C):
    a, b = list(a), list(b)
    i = j = 0
    cost = 0.0
    while i < len(a) and j < len(b):
        q = min(a[i], b[j])
        cost += q * C[i, j]
        a[i] -= q
        b[j] -= q
        if a[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return cost


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["soil", "moss", "fern", "bee", "fire", "rain", "wolf", "reed"]), min_size=1, max_size=40),
       st.lists(st.sampled_from(["soil", "moss", "fern", "bee", "fire", "rain", "wolf", "reed"]), min_size=1, max_size=40))
def test_wmd_feasible_symmetric_and_beats_greedy_plan(a, b):
    emb = HashEmbedder(dim=8)
    x, y = " ".join(a), " ".join(b)
    res = similarity.wmd(x, y, emb)
    _, xa = similarity.word_distribution(x)
    _, xb = similarity.word_distribution(y)
    assert np.allclose(res.plan.sum(axis=1), xa, atol=1e-9)
    assert np.allclose(res.plan.sum(axis=0), xb, atol=1e-9)
    C = similarity.word_cost_matrix(res.words_a, emb.embed_words(res.words_a), res.words_b, emb.embed_words(res.words_b))
    assert res.distance <= _nw_corner_cost(xa, xb, C) + 1e-12
    assert similarity.wmd_similarity(y, x, emb) == pytest.approx(res.similarity, abs=1e-12)
    assert res.similarity <= 1.0 + 1e-12


# --- group matrices -------------------------------------------------------

TEXTS = [
    "Grazing lowers sward height and raises forb richness in temperate grassland.",
    "Fire suppression lets shrubs encroach into savanna and lowers grass cover.",
    "Pollinator visits decline with distance from semi-natural habitat edges.",
    "Nitrogen deposition favours fast-growing grasses over slow-growing forbs.",
]


def _group(model, d, b, items):
    label = ConfigLabel(model, "orkg", d, b)
    g = ConfigGroup(label)
    for k, text in items:
        g.add(ReportRecord.from_body(ReportName(k, model, "orkg", d, b), text + "\n\n## Sources\n\n- https://x.org/" + str(k)))
    return g


def test_single_group_matrix():
    g = _group("o3", 1, 1, [(1, TEXTS[0]), (2, TEXTS[1])])
    m = similarity.pairwise_matrix([g], "rouge_l")
    assert m.values.tolist() == [[1.0]] and m.pair_counts.tolist() == [[2]]


@pytest.mark.parametrize("metric", similarity.METRICS)
def test_matrix_symmetric_diagonal_one(metric):
    groups = [
        _group("o3", 1, 1, [(1, TEXTS[0]), (2, TEXTS[1]), (3, TEXTS[2])]),
        _group("o3", 4, 4, [(2, TEXTS[2]), (3, TEXTS[3]), (4, TEXTS[0])]),
        _group("o3-mini", 1, 1, [(1, TEXTS[3]), (3, TEXTS[1])]),
    ]
    emb = HashEmbedder(dim=32)
    m = similarity.pairwise_matrix(groups, metric, emb)
    par = similarity.pairwise_matrix(groups, metric, emb, jobs=4)
    assert np.array_equal(m.values, par.values)
    assert np.array_equal(m.values, m.values.T)
    assert np.all(np.diag(m.values) == 1.0)
    assert m.pair_counts.tolist() == [[3, 2, 2], [2, 3, 1], [2, 1, 2]]
    # cell (0, 1) averages the aligned indices 2 and 3
    r = [similarity._Scorer(metric, emb, lambda rec: rec.prose).score(groups[0].records[k], groups[1].records[k])
         for k in (2, 3)]
    assert m.values[0, 1] == pytest.approx(np.mean(r), abs=1e-15)


def test_missing_cells_marked():
    a = _group("o3", 1, 1, [(1, TEXTS[0])])
    b = _group("o3", 4, 4, [(2, TEXTS[1])])
    m = similarity.pairwise_matrix([a, b], "rouge_l")
    assert math.isnan(m.values[0, 1]) and m.pair_counts[0, 1] == 0
    assert m.missing() == [("o3_orkg_d1_b1", "o3_orkg_d4_b4")]


def test_matrix_needs_embedder_and_known_metric():
    g = _group("o3", 1, 1, [(1, TEXTS[0])])
    with pytest.raises(ValueError):
        similarity.pairwise_matrix([g], "bertscore")
    with pytest.raises(ValueError):
        similarity.pairwise_matrix([g], "bleu")
    with pytest.raises(ValueError):
        similarity.pairwise_matrix([], "rouge_l")


def test_sources_excluded_from_similarity():
    a = _group("o3", 1, 1, [(1, TEXTS[0])])
    b = _group("o3", 2, 2, [(1, TEXTS[0])])
    m = similarity.pairwise_matrix([a, b], "rouge_l")
    assert m.values[0, 1] == 1.0  # bodies differ only in their Sources URL


def test_matrix_csv_round_trip(tmp_path):
    a = _group("o3", 1, 1, [(1, TEXTS[0]), (2, TEXTS[1])])
    b = _group("o3", 4, 4, [(2, TEXTS[2])])
    c = _group("o3", 4, 1, [(7, TEXTS[3])])
    m = similarity.pairwise_matrix([a, b, c], "rouge_l")
    similarity.write_matrix_csv(tmp_path / "m.csv", m)
    similarity.write_pair_counts_csv(tmp_path / "p.csv", m)
    labels, values = similarity.read_matrix_csv(tmp_path / "m.csv")
    assert labels == m.config_labels
    assert np.array_equal(np.isnan(values), np.isnan(m.values))
    assert np.array_equal(np.nan_to_num(values), np.nan_to_num(m.values))
    assert ",," in (tmp_path / "m.csv").read_text()
    assert (tmp_path / "p.csv").read_text().splitlines()[1] == "o3_orkg_d1_b1,2,1,0"
