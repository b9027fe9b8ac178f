import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import pdist

from utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

STOCHASTIC_TOL = 1e-12
# accumulated rounding allowed in long products
PRODUCT_TOL = 1e-10


def check_stochastic(entries: np.ndarray, tol: float = STOCHASTIC_TOL) -> np.ndarray:
    """
    Validates a column-stochastic matrix (column x is the distribution after leaving x).

    Raises:
        InvalidArgumentError: If the matrix is not square, has negative
            entries or a column sum differs from 1 by more than tol.
    """
    entries = np.asarray(entries, dtype=np.float64)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.size == 0:
        raise InvalidArgumentError(f"transition matrix must be square, got shape {entries.shape}")
    if np.any(entries < -tol):
        raise InvalidArgumentError(f"transition matrix has negative entries (min {entries.min():.3g})")
    drift = np.abs(entries.sum(axis=0) - 1.0)
    if np.any(drift > tol):
        column = int(np.argmax(drift))
        raise InvalidArgumentError(f"column {column} sums to {entries[:, column].sum():.15g}, not 1")
    return entries


@dataclass(frozen=True)
class TransitionMatrix:
    """
    Dense column-stochastic matrix [G]_{y,x} over the canonical state order.

    time_tag is (t_end, t_start): a single step at time t is tagged
    (t + 1, t), a product G(t_end - 1) ... G(t_start) keeps the span.
    """

    entries: np.ndarray
    time_tag: Tuple[int, int] = (1, 0)

    def __post_init__(self):
        object.__setattr__(self, "entries", check_stochastic(self.entries))

    @classmethod
    def at(cls, entries: np.ndarray, t: int) -> "TransitionMatrix":
        return cls(entries, (t + 1, t))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def then(self, later: "TransitionMatrix") -> "TransitionMatrix":
        """later @ self, i.e. apply self first."""
        entries = check_stochastic(later.entries @ self.entries, PRODUCT_TOL)
        return TransitionMatrix(_renormalised(entries), (later.time_tag[0], self.time_tag[1]))

    def apply(self, distribution: np.ndarray) -> np.ndarray:
        return self.entries @ distribution


def _renormalised(entries: np.ndarray) -> np.ndarray:
    # rounding only; check_stochastic has already bounded the drift
    return entries / entries.sum(axis=0, keepdims=True)


def _entries(matrix: Union[TransitionMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(matrix, TransitionMatrix):
        return matrix.entries
    return check_stochastic(matrix, PRODUCT_TOL)


def ergodicity_coefficient(matrix: Union[TransitionMatrix, np.ndarray]) -> float:
    """
    alpha(G) = 1 - min over column pairs (x, y) of sum_z min(G[z, x], G[z, y]).

    alpha = 1 when two columns have disjoint support and 0 for a rank-one
    matrix; alpha < 1 certifies a contraction in total variation.

    Args:
        matrix (TransitionMatrix | np.ndarray): Column-stochastic matrix or product.

    Returns:
        float: The coefficient in [0, 1].
    """
    entries = _entries(matrix)
    size = entries.shape[0]
    if size == 1:
        return 0.0
    overlap = np.inf
    for x in range(size - 1):
        pair = np.minimum(entries[:, x:x + 1], entries[:, x + 1:]).sum(axis=0)
        overlap = min(overlap, float(pair.min()))
    return float(np.clip(1.0 - overlap, 0.0, 1.0))


def tv_diameter(matrix: Union[TransitionMatrix, np.ndarray]) -> float:
    """Largest L1 distance between two columns; the sup over initial laws is attained at point masses."""
    entries = _entries(matrix)
    if entries.shape[0] == 1:
        return 0.0
    return float(pdist(entries.T, metric="cityblock").max())


def product(matrices: Sequence[TransitionMatrix]) -> TransitionMatrix:
    """
    Time-ordered product, earliest first in the sequence:
    product([G(t0), G(t0+1), ...]) = ... G(t0+1) G(t0).
    """
    if not matrices:
        raise InvalidArgumentError("product of an empty sequence")
    result = matrices[0]
    for later in matrices[1:]:
        if later.size != result.size:
            raise InvalidArgumentError("matrices act on different state spaces")
        result = result.then(later)
    return result


def chain_product(build: Callable[[int], TransitionMatrix], t_start: int, t_end: int) -> TransitionMatrix:
    """G^{t_end, t_start} = G(t_end - 1) ... G(t_start), built one step at a time."""
    if t_end <= t_start:
        raise InvalidArgumentError(f"empty time span [{t_start}, {t_end})")
    result = build(t_start)
    for t in range(t_start + 1, t_end):
        result = result.then(build(t))
    return result
