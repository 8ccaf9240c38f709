import numpy as np
import pytest

from rank_intent import (
    ConfigError,
    PreferenceMatrix,
    PreferencePair,
    exact_select,
    greedy_select,
    pcov,
    psum,
    utility,
)


def _matrix(values, baseline=None, terms=None):
    values = np.asarray(values, dtype=np.float64)
    n_rows, n_cols = values.shape
    terms = terms or [f"t{i:02d}" for i in range(n_rows)]
    pairs = [PreferencePair(f"a{j}", f"b{j}") for j in range(n_cols)]
    return PreferenceMatrix("q", terms, pairs, values, baseline)


def _random_matrix(rng, n_rows=12, n_cols=16):
    return _matrix(rng.normal(size=(n_rows, n_cols)))


def _sparse_matrix(rng, n_rows, n_cols, density=0.2, agree=0.8):
    # shaped like pair scores: most terms occur in neither document, the rest
    # mostly side with the black box
    magnitude = rng.exponential(size=(n_rows, n_cols))
    sign = np.where(rng.random((n_rows, n_cols)) < agree, 1.0, -1.0)
    mask = rng.random((n_rows, n_cols)) < density
    return _matrix(np.where(mask, sign * magnitude, 0.0))


class TestHealthHazards:
    def test_coverage(self, health_matrix):
        assert pcov(health_matrix, {"medicine"}) == 3
        assert pcov(health_matrix, {"medicine", "handle"}) == 2
        assert pcov(health_matrix, []) == 0

    def test_utility_can_be_negative(self, health_matrix):
        assert utility(health_matrix, ["medicine"], "handle") == -1
        assert utility(health_matrix, [], "medicine") == 3

    def test_utility_grows_with_a_larger_selection(self, health_matrix):
        # coverage is not submodular: exposure helps more once handle is in
        small = utility(health_matrix, ["medicine"], "exposure")
        large = utility(health_matrix, ["medicine", "handle"], "exposure")
        assert (small, large) == (1, 2)

    def test_greedy_rejects_coverage_loss(self, health_matrix):
        selection = greedy_select(health_matrix, budget=3)
        assert selection.terms == ("medicine", "exposure")
        assert selection.utilities == (3, 1)
        assert selection.coverage == 4
        assert "handle" not in selection
        assert selection.selected == (True, False, True)

    def test_exact(self, health_matrix):
        selection = exact_select(health_matrix, 2)
        assert selection.terms == ("exposure", "medicine")
        assert selection.coverage == 4
        assert selection.method == "exact"
        assert exact_select(health_matrix, 1).coverage >= 3

    def test_psum(self, health_matrix):
        assert psum(health_matrix, "medicine") == pytest.approx(0.6)
        assert psum(health_matrix, "exposure", mode="covered", current=["medicine"]) == (
            pytest.approx(0.35)
        )


def test_pcov_counts_strictly_positive_columns():
    matrix = _matrix([[0.0, 1.0, -1.0]])
    assert pcov(matrix, ["t00"]) == 1


def test_pcov_with_baseline():
    matrix = _matrix([[-0.5, 0.5]], baseline=[1.0, -1.0])
    assert pcov(matrix, []) == 1
    assert pcov(matrix, ["t00"]) == 1


def test_pcov_repeated_term():
    with pytest.raises(ValueError, match="repeats"):
        pcov(_matrix([[1.0]]), ["t00", "t00"])


def test_utility_of_selected_term():
    with pytest.raises(ValueError, match="already selected"):
        utility(_matrix([[1.0]]), ["t00"], "t00")


def test_greedy_tie_breaks_by_psum_then_term():
    matrix = _matrix([[1.0, -1.0], [2.0, -1.0], [2.0, -1.0]], terms=["c", "b", "a"])
    assert greedy_select(matrix, 1).terms == ("a",)
    matrix = _matrix([[1.0, -1.0], [0.5, -1.0]], terms=["a", "b"])
    assert greedy_select(matrix, 1).terms == ("a",)


def test_greedy_covered_psum_mode():
    # t00 has the larger positive mass, but t01 adds more to the newly covered column
    matrix = _matrix([[0.2, 5.0], [0.3, 0.0]], baseline=[0.0, 1.0])
    assert greedy_select(matrix, 1, psum_mode="positive").terms == ("t00",)
    assert greedy_select(matrix, 1, psum_mode="covered").terms == ("t01",)


def test_greedy_stops_without_gain():
    matrix = _matrix([[-1.0, -1.0], [-0.5, 0.0]])
    selection = greedy_select(matrix, 5)
    assert selection.terms == ()
    assert selection.coverage == 0


def test_greedy_budget():
    with pytest.raises(ConfigError, match="budget"):
        greedy_select(_matrix([[1.0]]), 0)
    rng = np.random.default_rng(3)
    assert len(greedy_select(_random_matrix(rng), 2)) <= 2


def test_greedy_reports_recomputable_coverage():
    rng = np.random.default_rng(17)
    for _ in range(50):
        matrix = _matrix(rng.normal(size=(10, 12)), baseline=rng.normal(size=12))
        selection = greedy_select(matrix, 4)
        assert selection.coverage == pcov(matrix, selection)
        assert selection.coverage == pcov(matrix, list(selection.terms))


def test_exact_refuses_large_inputs():
    with pytest.raises(ConfigError, match="use greedy_select instead"):
        exact_select(_matrix(np.zeros((23, 2))), 3)


def test_exact_prefers_least_term_tuple():
    matrix = _matrix([[1.0], [1.0], [1.0]], terms=["c", "a", "b"])
    assert exact_select(matrix, 2).terms == ("a",)


def test_greedy_matches_exact_on_sparse_matrices():
    rng = np.random.default_rng(2024)
    equal = 0
    for _ in range(200):
        n_rows = int(rng.integers(2, 13))
        n_cols = int(rng.integers(2, 17))
        matrix = _sparse_matrix(rng, n_rows, n_cols)
        greedy = greedy_select(matrix, 4).coverage
        best = exact_select(matrix, 4)
        assert greedy <= best.coverage
        assert best.coverage == pcov(matrix, best)
        equal += greedy == best.coverage
    assert equal >= 160


def test_greedy_never_beats_exact_on_dense_matrices():
    rng = np.random.default_rng(7)
    for _ in range(100):
        matrix = _random_matrix(rng, int(rng.integers(2, 11)), int(rng.integers(2, 13)))
        assert greedy_select(matrix, 4).coverage <= exact_select(matrix, 4).coverage
