import itertools

import numpy as np
import pytest

from rank_intent import (
    DataError,
    ExplanationRanker,
    PreferenceMatrix,
    PreferencePair,
    Ranking,
    Sampling,
    build_matrix,
    pair_score,
    sample_pairs,
    topk_pairs,
)


def _ranking(n):
    return Ranking.from_scores("q", {f"d{i:03d}": -float(i) for i in range(n)}, "test")


def _assert_oriented_and_distinct(ranking, sample):
    keys = [p.key for p in sample]
    assert len(set(keys)) == len(keys)
    assert len({frozenset(k) for k in keys}) == len(keys)
    for p in sample:
        assert ranking.position(p.better) < ranking.position(p.worse)


def test_topk_pairs_count():
    ranking = _ranking(30)
    sample = topk_pairs(ranking, 10)
    assert len(sample) == 45
    assert sample.n_topk == 45
    assert sample.flags == ()
    assert sample.pairs[0].key == ("d000", "d001")
    _assert_oriented_and_distinct(ranking, sample)


def test_topk_pairs_short_ranking():
    sample = topk_pairs(_ranking(4), 10)
    assert len(sample) == 6
    assert sample.flags == ("short_ranking",)


@pytest.mark.parametrize("strategy", ["random", "rank-biased"])
def test_whole_ranking_strategies(strategy):
    ranking = _ranking(50)
    sample = sample_pairs(strategy, ranking, 100, 3)
    assert len(sample) == 100
    assert sample.n_topk == 0
    assert sample.strategy is Sampling[strategy.upper().replace("-", "_")]
    _assert_oriented_and_distinct(ranking, sample)


@pytest.mark.parametrize("strategy", ["topk-random", "topk-rank-random"])
def test_topk_plus_sampled(strategy):
    ranking = _ranking(60)
    sample = sample_pairs(strategy, ranking, 200, 11, k=10)
    assert len(sample) == 245
    assert sample.n_topk == 45
    _assert_oriented_and_distinct(ranking, sample)
    top = set(ranking.doc_ids[:10])
    sampled = [p for p in sample if p.source == "sampled"]
    # sampled pairs never repeat a top-k pair
    assert not any(p.better in top and p.worse in top for p in sampled)


def test_topk_ignores_m():
    assert len(sample_pairs(Sampling.TOPK, _ranking(20), 500, 0)) == 45


def test_all_pairs_when_m_exceeds_the_pool():
    ranking = _ranking(8)
    sample = sample_pairs("random", ranking, 500, 0)
    assert len(sample) == 28
    assert "all_pairs" in sample.flags


def test_topk_random_all_pairs():
    ranking = _ranking(12)
    sample = sample_pairs("topk-random", ranking, 500, 0, k=10)
    assert len(sample) == 66
    assert "all_pairs" in sample.flags


def test_seeded_sampling_is_deterministic():
    ranking = _ranking(40)
    a = sample_pairs("rank-biased", ranking, 50, 42)
    b = sample_pairs("rank-biased", ranking, 50, np.random.default_rng(42))
    assert a.pairs == b.pairs
    assert a.pairs != sample_pairs("rank-biased", ranking, 50, 43).pairs


def test_rank_biased_prefers_the_head():
    ranking = _ranking(200)
    sample = sample_pairs("rank-biased", ranking, 300, 5)
    positions = [ranking.position(p.better) for p in sample]
    assert np.median(positions) < 50


def test_negative_m():
    with pytest.raises(DataError):
        sample_pairs("random", _ranking(5), -1, 0)


def test_self_pair():
    with pytest.raises(DataError, match="self-pair"):
        PreferencePair("d1", "d1")


def test_pair_identity():
    pair = PreferencePair("d1", "d2")
    assert pair.pair_id == "d1>d2"
    assert pair.reversed().key == ("d2", "d1")


def test_build_matrix_cells(toy_index):
    ranker = ExplanationRanker(toy_index)
    pairs = [PreferencePair("d2", "d1"), PreferencePair("d6", "d4"), PreferencePair("d1", "d3")]
    matrix = build_matrix(["lung", "medicine", "tobacco"], pairs, ranker, query_id="q1")
    assert matrix.shape == (3, 3)
    for term in matrix.terms:
        for j, pair in enumerate(pairs):
            assert matrix.row(term)[j] == pytest.approx(pair_score(term, pair, ranker), abs=1e-12)
    assert not matrix.baseline.any()


def test_build_matrix_anchor(toy_index):
    ranker = ExplanationRanker(toy_index)
    pairs = [PreferencePair("d2", "d1"), PreferencePair("d6", "d4")]
    matrix = build_matrix(["health", "lung"], pairs, ranker, anchor=["health", "smoking"])
    assert matrix.terms == ("lung",)
    expected = [
        pair_score("health", p, ranker) + pair_score("smoking", p, ranker) for p in pairs
    ]
    np.testing.assert_allclose(matrix.baseline, expected, atol=1e-12)


def test_pair_score_is_antisymmetric(toy_index):
    ranker = ExplanationRanker(toy_index)
    for a, b in itertools.combinations(toy_index.doc_ids, 2):
        pair = PreferencePair(a, b)
        for term in ("health", "lung", "garden", "unseen"):
            assert pair_score(term, pair.reversed(), ranker) == -pair_score(term, pair, ranker)


def test_build_matrix_keeps_query_terms_as_rows(toy_index):
    ranker = ExplanationRanker(toy_index)
    candidates = ["health", "hazards", "lung", "medicine"]
    pairs = [PreferencePair("d2", "d1"), PreferencePair("d6", "d4")]
    matrix = build_matrix(candidates, pairs, ranker, query_id="q1")
    assert matrix.shape == (4, 2)
    assert matrix.terms == tuple(candidates)
    assert not matrix.baseline.any()


def test_build_matrix_needs_rows_and_pairs(toy_index):
    ranker = ExplanationRanker(toy_index)
    with pytest.raises(DataError, match="no candidate terms"):
        build_matrix(["health"], [PreferencePair("d1", "d2")], ranker, anchor=["health"])
    with pytest.raises(DataError, match="no preference pairs"):
        build_matrix(["health"], [], ranker)


class TestPreferenceMatrix:
    def test_validation(self):
        pair = PreferencePair("a", "b")
        with pytest.raises(DataError, match="repeats a term"):
            PreferenceMatrix("q", ["x", "x"], [pair], np.zeros((2, 1)))
        with pytest.raises(DataError, match="repeats a pair"):
            PreferenceMatrix("q", ["x"], [pair, pair], np.zeros((1, 2)))
        with pytest.raises(DataError, match="non-finite"):
            PreferenceMatrix("q", ["x"], [pair], np.array([[np.inf]]))
        with pytest.raises(DataError, match="baseline"):
            PreferenceMatrix("q", ["x"], [pair], np.zeros((1, 1)), np.zeros(3))

    def test_read_only(self, health_matrix):
        with pytest.raises(ValueError):
            health_matrix.values[0, 0] = 1.0

    def test_restrict(self, health_matrix):
        sub = health_matrix.restrict(["handle", "nope", "medicine"])
        assert sub.terms == ("handle", "medicine")
        np.testing.assert_array_equal(sub.row("medicine"), health_matrix.row("medicine"))

    def test_unknown_row(self, health_matrix):
        with pytest.raises(KeyError, match="not a row"):
            health_matrix.row("tobacco")

    def test_save_and_load_keep_baseline(self, tmp_path):
        pairs = [PreferencePair("a", "b"), PreferencePair("b", "c")]
        matrix = PreferenceMatrix(
            "q7", ["x", "y"], pairs, np.array([[0.1, -0.2], [0.3, 0.0]]), np.array([0.5, -1.0])
        )
        path = tmp_path / "q7.tsv"
        matrix.save(path)
        loaded = PreferenceMatrix.load(path)
        assert loaded.query_id == "q7"
        assert loaded.terms == matrix.terms
        assert [p.key for p in loaded.pairs] == [p.key for p in pairs]
        np.testing.assert_array_equal(loaded.values, matrix.values)
        np.testing.assert_array_equal(loaded.baseline, matrix.baseline)

    def test_load_rejects_bad_header(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("word\ta>b\nx\t1.0\n")
        with pytest.raises(DataError, match="first column"):
            PreferenceMatrix.load(path)
