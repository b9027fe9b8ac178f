import numpy as np
import pytest

from utils.errors import InvalidArgumentError
from utils.markov import (
    TransitionMatrix,
    chain_product,
    check_stochastic,
    ergodicity_coefficient,
    product,
    tv_diameter,
)

# columns are source states
HAND_COMPUTED = [
    (np.eye(2), 1.0),
    (np.array([[0.3, 0.3], [0.7, 0.7]]), 0.0),
    (np.array([[0.9, 0.2], [0.1, 0.8]]), 0.7),
    (np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]]), 0.5),
    (np.array([[1.0, 0.5, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]]), 1.0),
    (np.array([[0.6, 0.1, 0.3], [0.2, 0.6, 0.3], [0.2, 0.3, 0.4]]), 0.5),
    (np.array([[1.0]]), 0.0),
]


@pytest.mark.parametrize("entries,alpha", HAND_COMPUTED)
def test_ergodicity_coefficient_hand_computed(entries, alpha):
    assert ergodicity_coefficient(entries) == pytest.approx(alpha, abs=1e-12)


@pytest.mark.parametrize("entries,alpha", HAND_COMPUTED)
def test_tv_diameter_is_twice_alpha(entries, alpha):
    assert tv_diameter(entries) == pytest.approx(2.0 * alpha, abs=1e-12)


def test_ergodicity_coefficient_accepts_transition_matrix():
    matrix = TransitionMatrix.at(np.array([[0.9, 0.2], [0.1, 0.8]]), 5)
    assert matrix.time_tag == (6, 5)
    assert ergodicity_coefficient(matrix) == pytest.approx(0.7)


def test_random_stochastic_matrices_stay_in_range(rng):
    for _ in range(20):
        entries = rng.random((5, 5))
        entries /= entries.sum(axis=0, keepdims=True)
        alpha = ergodicity_coefficient(entries)
        assert 0.0 <= alpha < 1.0


@pytest.mark.parametrize(
    "entries",
    [
        np.array([[0.5, 0.5], [0.4, 0.5]]),
        np.array([[1.2, 0.5], [-0.2, 0.5]]),
        np.ones((2, 3)) / 2,
    ],
)
def test_non_stochastic_matrices_are_rejected(entries):
    with pytest.raises(InvalidArgumentError):
        check_stochastic(entries)
    with pytest.raises(InvalidArgumentError):
        ergodicity_coefficient(entries)


def test_column_sum_error_names_the_column():
    with pytest.raises(InvalidArgumentError, match="column 1"):
        check_stochastic(np.array([[1.0, 0.5], [0.0, 0.4]]))


def test_product_applies_earliest_first():
    first = TransitionMatrix.at(np.array([[0.0, 1.0], [1.0, 0.0]]), 0)
    second = TransitionMatrix.at(np.array([[1.0, 0.5], [0.0, 0.5]]), 1)
    combined = product([first, second])
    np.testing.assert_allclose(combined.entries, second.entries @ first.entries)
    assert combined.time_tag == (2, 0)


def test_product_rejects_empty_and_mismatched():
    with pytest.raises(InvalidArgumentError):
        product([])
    with pytest.raises(InvalidArgumentError):
        product([TransitionMatrix(np.eye(2)), TransitionMatrix(np.eye(3))])


def test_chain_product_contracts():
    mixing = np.array([[0.9, 0.2], [0.1, 0.8]])
    result = chain_product(lambda t: TransitionMatrix.at(mixing, t), 0, 10)
    assert result.time_tag == (10, 0)
    assert ergodicity_coefficient(result) == pytest.approx(0.7 ** 10, rel=1e-9)
    with pytest.raises(InvalidArgumentError):
        chain_product(lambda t: TransitionMatrix.at(mixing, t), 3, 3)


def test_apply_preserves_mass():
    matrix = TransitionMatrix(np.array([[0.6, 0.1, 0.3], [0.2, 0.6, 0.3], [0.2, 0.3, 0.4]]))
    result = matrix.apply(np.array([0.2, 0.5, 0.3]))
    assert result.sum() == pytest.approx(1.0)
