import math

import numpy as np
import pytest

from rank_intent import ConfigError, ExplanationRanker, Query, RankedDoc, Ranking, jm_score
from rank_intent._rankers import LOG_FLOOR, expansion_terms


def test_term_score_formula(toy_index):
    ranker = ExplanationRanker(toy_index, delta=1.0)
    v = toy_index.vocab_size
    assert ranker.term_score("tobacco", "d5") == pytest.approx(math.log(2 / (4 + v)))
    assert ranker.term_score("garden", "d5") == pytest.approx(math.log(1 / (4 + v)))


def test_expanded_score_counts_each_term_once(toy_index):
    ranker = ExplanationRanker(toy_index)
    query = Query("q", ("health", "health"))
    expected = ranker.term_score("health", "d2") + ranker.term_score("medicine", "d2")
    assert ranker.score_expanded(query, ["medicine", "health"], "d2") == pytest.approx(expected)


def test_each_expansion_term_adds_its_own_score(toy_index):
    ranker = ExplanationRanker(toy_index)
    query = Query("q", ("health", "hazards"))
    base = ["lung", "medicine"]
    for term in sorted(toy_index.postings):
        if term in query.term_set or term in base:
            continue
        for doc_id in toy_index.doc_ids:
            gain = ranker.score_expanded(query, [*base, term], doc_id) - ranker.score_expanded(
                query, base, doc_id
            )
            assert gain == pytest.approx(ranker.term_score(term, doc_id), abs=1e-9)


def test_expansion_terms_sorted_union():
    assert expansion_terms(Query("q", ("b1", "a1")), ["c1", "a1"]) == ("a1", "b1", "c1")


def test_score_matrix_matches_term_score(toy_index):
    ranker = ExplanationRanker(toy_index)
    terms = ["health", "tobacco", "garden"]
    docs = ["d1", "d3", "d6"]
    scores = ranker.score_matrix(terms, docs)
    assert scores.shape == (3, 3)
    for i, t in enumerate(terms):
        for j, d in enumerate(docs):
            assert scores[i, j] == pytest.approx(ranker.term_score(t, d), abs=1e-12)


def test_score_matrix_empty(toy_index):
    assert ExplanationRanker(toy_index).score_matrix([], ["d1"]).shape == (0, 1)


def test_rank_expanded_orders_by_score(toy_index):
    ranker = ExplanationRanker(toy_index)
    ranking = ranker.rank_expanded(Query("q", ("medicine",)), ["lung"], toy_index.doc_ids)
    assert isinstance(ranking, Ranking)
    assert set(ranking.doc_ids[:2]) == {"d2", "d6"}
    scores = np.array(ranking.scores)
    assert (np.diff(scores) <= 0).all()


def test_delta_must_be_positive(toy_index):
    with pytest.raises(ConfigError, match="delta"):
        ExplanationRanker(toy_index, delta=0.0)


def test_jm_score(toy_index):
    doc = toy_index.document("d5")
    p = 0.4 * (1 / 4) + 0.6 * toy_index.collection_prob("tobacco")
    assert jm_score(toy_index, ["tobacco"], doc) == pytest.approx(math.log(p))


def test_jm_score_unseen_term_hits_floor(toy_index):
    assert jm_score(toy_index, ["zebra"], "d1") == LOG_FLOOR


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5])
def test_jm_alpha_range(toy_index, alpha):
    with pytest.raises(ConfigError, match="alpha"):
        jm_score(toy_index, ["health"], "d1", alpha)


class TestRanking:
    def test_from_scores_breaks_ties_by_doc_id(self):
        ranking = Ranking.from_scores("q", {"b": 1.0, "a": 1.0, "c": 2.0}, "test")
        assert ranking.doc_ids == ("c", "a", "b")
        assert ranking.position("b") == 3

    def test_rejects_repeated_documents(self):
        with pytest.raises(ValueError, match="repeats"):
            Ranking("q", (RankedDoc("a"), RankedDoc("a")), "test")

    def test_rejects_increasing_scores(self):
        with pytest.raises(ValueError, match="increase"):
            Ranking("q", (RankedDoc("a", 1.0), RankedDoc("b", 2.0)), "test")

    def test_without_scores(self):
        ranking = Ranking.from_scores("q", {"a": 2.0, "b": 1.0}, "test").without_scores()
        assert not ranking.has_scores
        assert ranking.scores is None
        assert ranking.doc_ids == ("a", "b")

    def test_position_of_missing_document(self):
        with pytest.raises(KeyError, match="not in ranking"):
            Ranking.from_scores("q", {"a": 1.0}, "test").position("z")
