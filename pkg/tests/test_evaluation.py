import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from src.analysis.evaluation import best_of_references, hit_rate, match_boundaries, score_windows
from src.errors import EvaluationError

boundary_lists = st.lists(st.floats(min_value=0.0, max_value=60.0, allow_nan=False), min_size=1, max_size=12).map(
    sorted
)


def matching_oracle(estimated, reference, window):
    """Maximum bipartite matching via the assignment problem"""
    if not estimated or not reference:
        return 0
    hits = np.abs(np.subtract.outer(estimated, reference)) <= window
    rows, cols = linear_sum_assignment(hits.astype(float), maximize=True)
    return int(hits[rows, cols].sum())


def test_identical_lists_match_completely():
    times = [0.0, 12.5, 30.1, 44.0]

    assert match_boundaries(times, times, 0.5) == 4


def test_threshold():
    assert match_boundaries([1.0], [1.4], 0.5) == 1
    assert match_boundaries([1.0], [1.4], 0.3) == 0


def test_matching_is_one_to_one():
    assert match_boundaries([1.0, 1.2], [1.1], 0.5) == 1


def test_greedy_matching_is_maximal_on_crowded_lists():
    # a naive nearest-neighbour assignment matches only one pair here
    assert match_boundaries([1.0, 2.0], [1.6, 2.7], 0.75) == 2


def test_matching_against_assignment_oracle(rng):
    for _ in range(500):
        estimated = sorted(rng.uniform(0, 20, size=rng.integers(1, 8)).round(1).tolist())
        reference = sorted(rng.uniform(0, 20, size=rng.integers(1, 8)).round(1).tolist())
        window = float(rng.choice([0.5, 1.0, 3.0]))
        assert match_boundaries(estimated, reference, window) == matching_oracle(estimated, reference, window)


def test_perfect_score():
    times = [0.0, 10.0, 20.0, 30.0, 40.0]

    score = hit_rate(times, times)

    assert (score.precision, score.recall, score.f_measure, score.matched) == (1.0, 1.0, 1.0, 5)


def test_hit_rate_formula():
    reference = [10.0 * k for k in range(8)]
    estimated = reference[:5] + [5.0 + 10.0 * k for k in range(5)]

    score = hit_rate(sorted(estimated), reference, window=0.5)

    assert score.matched == 5
    assert score.precision == pytest.approx(0.5)
    assert score.recall == pytest.approx(0.625)
    assert score.f_measure == pytest.approx(0.5556, abs=1e-4)


def test_no_matches_score_zero():
    score = hit_rate([1.0], [10.0])

    assert score.f_measure == 0.0


def test_trim_drops_piece_start_and_end():
    estimated = [0.0, 8.0, 20.0]
    reference = [0.0, 16.0, 20.0]

    assert hit_rate(estimated, reference).f_measure == pytest.approx(2 / 3)
    assert hit_rate(estimated, reference, trim=True).f_measure == 0.0


def test_trim_leaving_nothing_scores_zero():
    score = hit_rate([0.0, 20.0], [0.0, 20.0], trim=True)

    assert (score.precision, score.recall, score.f_measure) == (0.0, 0.0, 0.0)


@pytest.mark.parametrize("estimated, reference", [([], [1.0]), ([1.0], [])])
def test_empty_lists_are_rejected(estimated, reference):
    with pytest.raises(EvaluationError, match="empty"):
        hit_rate(estimated, reference)


def test_unsorted_input_is_rejected():
    with pytest.raises(EvaluationError, match="not sorted"):
        match_boundaries([2.0, 1.0], [1.0], 0.5)
    with pytest.raises(EvaluationError, match="non-negative"):
        match_boundaries([-1.0], [1.0], 0.5)


def test_score_windows():
    scores = score_windows([0.0, 9.0, 20.0], [0.0, 10.0, 20.0])

    assert [s.window for s in scores] == [0.5, 3.0]
    assert [s.matched for s in scores] == [2, 3]


@settings(max_examples=200, deadline=None)
@given(boundary_lists, boundary_lists, st.sampled_from([0.5, 3.0]))
def test_precision_and_recall_swap_with_arguments(estimated, reference, window):
    forward = hit_rate(estimated, reference, window)
    backward = hit_rate(reference, estimated, window)

    assert forward.precision == backward.recall
    assert forward.recall == backward.precision
    assert forward.matched <= min(len(estimated), len(reference))
    assert forward.f_measure <= 2 * min(forward.precision, forward.recall) + 1e-12


@settings(max_examples=200, deadline=None)
@given(boundary_lists, boundary_lists)
def test_matched_count_grows_with_window(estimated, reference):
    counts = [match_boundaries(estimated, reference, w) for w in (0.1, 0.5, 1.0, 3.0, 10.0)]

    assert counts == sorted(counts)


def test_best_of_references_picks_highest_f():
    estimated = [0.0, 15.0, 30.0]
    references = [[0.0, 10.0, 20.0, 30.0], [0.0, 15.0, 30.0], [0.0, 14.0, 30.0]]

    assert best_of_references(estimated, references, window=0.5) == 1
    # equal scores at 3 s go to the first of them
    assert best_of_references(estimated, references[1:], window=3.0) == 0


def test_best_of_references_requires_a_reference():
    with pytest.raises(EvaluationError):
        best_of_references([0.0, 1.0], [])
