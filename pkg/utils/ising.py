import json
import logging
from enum import Enum
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from utils.errors import CapacityError, InvalidArgumentError

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = 20
# energies closer than this are treated as degenerate
ENERGY_TOL = 1e-9


class IsingInstance(BaseModel):
    """
    Classical Ising cost function E0(s) = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i.

    Couplings are stored once per unordered pair as (i, j, J) with i < j,
    sorted by (i, j); fields as (i, h) sorted by i. Instances are frozen and
    hashable, so two instances compare equal exactly when their data does.

    Fields:
        n_spins (int): Number of spins N >= 1.
        couplings (tuple): ((i, j, J_ij), ...) with 0 <= i < j < N.
        fields (tuple): ((i, h_i), ...) longitudinal fields, may be empty.
    """

    model_config = ConfigDict(frozen=True)

    n_spins: int = Field(ge=1)
    couplings: Tuple[Tuple[int, int, float], ...] = ()
    fields: Tuple[Tuple[int, float], ...] = ()

    @field_validator("couplings", mode="before")
    @classmethod
    def _normalise_couplings(cls, value):
        pairs = []
        for entry in value or ():
            i, j, coupling = entry
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-coupling ({i},{i}) is not allowed")
            pairs.append((min(i, j), max(i, j), float(coupling)))
        keys = [(i, j) for i, j, _ in pairs]
        if len(set(keys)) != len(keys):
            raise ValueError("coupling listed more than once for the same pair")
        return tuple(sorted(pairs))

    @field_validator("fields", mode="before")
    @classmethod
    def _normalise_fields(cls, value):
        entries = [(int(i), float(h)) for i, h in (value or ())]
        if len({i for i, _ in entries}) != len(entries):
            raise ValueError("field listed more than once for the same site")
        return tuple(sorted(entries))

    @model_validator(mode="after")
    def _check_sites(self):
        for i, j, _ in self.couplings:
            if i < 0 or j >= self.n_spins:
                raise ValueError(f"coupling ({i},{j}) refers to a site outside 0..{self.n_spins - 1}")
        for i, _ in self.fields:
            if not 0 <= i < self.n_spins:
                raise ValueError(f"field on site {i} outside 0..{self.n_spins - 1}")
        return self

    def coupling_matrix(self) -> np.ndarray:
        """Symmetric N x N matrix of J_ij with a zero diagonal."""
        matrix = np.zeros((self.n_spins, self.n_spins))
        for i, j, coupling in self.couplings:
            matrix[i, j] = coupling
            matrix[j, i] = coupling
        return matrix

    def field_vector(self) -> np.ndarray:
        vector = np.zeros(self.n_spins)
        for i, h in self.fields:
            vector[i] = h
        return vector

    @property
    def has_fields(self) -> bool:
        return any(h != 0.0 for _, h in self.fields)

    def site_bound(self, i: int) -> float:
        """Largest |E0(x) - E0(y)| / 2 over single flips of spin i."""
        return float(np.abs(self.coupling_matrix()[i]).sum() + abs(self.field_vector()[i]))

    def energy_bound(self) -> float:
        """Coupling-sum bound B with -B <= E0(x) <= B for every x."""
        return float(sum(abs(c) for _, _, c in self.couplings) + sum(abs(h) for _, h in self.fields))

    def to_json_dict(self) -> dict:
        return {
            "n_spins": self.n_spins,
            "couplings": [[i, j, c] for i, j, c in self.couplings],
            "fields": [[i, h] for i, h in self.fields],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "IsingInstance":
        return cls(n_spins=data["n_spins"], couplings=data.get("couplings", ()), fields=data.get("fields", ()))

    @classmethod
    def from_file(cls, path: str) -> "IsingInstance":
        """
        Loads an instance from the JSON instance format
        {"n_spins": N, "couplings": [[i, j, J], ...], "fields": [[i, h], ...]}.
        """
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json_dict(json.load(f))

    def to_file(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json_dict(), f, indent=2)


class MoveKind(str, Enum):
    SINGLE_FLIP = "single-spin-flip"
    ALL_TO_ALL = "all-to-all"


class MoveSet(BaseModel):
    """
    Generation probability P(y, x) of a proposal step.

    single-spin-flip: P(y, x) = 1/N when x and y differ in exactly one spin.
    all-to-all: P(y, x) = 1/(2^N - 1) for every y != x.
    Both are symmetric, vanish on the diagonal and sum to one over y.
    """

    model_config = ConfigDict(frozen=True)

    kind: MoveKind = MoveKind.SINGLE_FLIP

    def generation_probability(self, y: Sequence[int], x: Sequence[int]) -> float:
        x = np.asarray(x)
        y = np.asarray(y)
        if x.shape != y.shape:
            raise InvalidArgumentError("configurations have different lengths")
        distance = int(np.count_nonzero(x != y))
        if distance == 0:
            return 0.0
        if self.kind is MoveKind.SINGLE_FLIP:
            return 1.0 / x.size if distance == 1 else 0.0
        return 1.0 / (2 ** x.size - 1)

    def generation_matrix(self, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
        """Dense 2^n x 2^n matrix [P]_{y,x} in canonical state order."""
        size = 2 ** _checked_bits(n, cap)
        if self.kind is MoveKind.ALL_TO_ALL:
            if size == 1:
                return np.zeros((1, 1))
            matrix = np.full((size, size), 1.0 / (size - 1))
            np.fill_diagonal(matrix, 0.0)
            return matrix
        matrix = np.zeros((size, size))
        index = np.arange(size)
        for bit in range(n):
            matrix[index ^ (1 << bit), index] = 1.0 / n
        return matrix

    def is_irreducible(self, n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> bool:
        """True when the proposal graph over all 2^n states is connected."""
        graph = csr_matrix(self.generation_matrix(n, cap) > 0)
        n_components, _ = connected_components(graph, directed=True, connection="strong")
        return n_components == 1


class GroundStates(NamedTuple):
    e_min: float
    minimizers: np.ndarray


def check_config(instance: IsingInstance, config: Sequence[int]) -> np.ndarray:
    """
    Validates a spin configuration against an instance.

    Returns:
        np.ndarray: The configuration as an int8 array of +-1.
    """
    spins = np.asarray(config)
    if spins.ndim != 1 or spins.size != instance.n_spins:
        raise InvalidArgumentError(
            f"configuration of shape {spins.shape} does not match {instance.n_spins} spins"
        )
    if not np.all(np.abs(spins) == 1):
        raise InvalidArgumentError("spin values must be exactly +1 or -1")
    return spins.astype(np.int8)


def energy(instance: IsingInstance, config: Sequence[int]) -> float:
    """
    Classical cost E0(x) of one configuration.

    Args:
        instance (IsingInstance): Couplings and fields.
        config (Sequence[int]): N spins in {-1, +1}.

    Returns:
        float: -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i.
    """
    spins = check_config(instance, config)
    return float(energies(instance, spins[None, :])[0])


def energies(instance: IsingInstance, configs: np.ndarray) -> np.ndarray:
    """Vectorised E0 over the rows of a (K, N) array of spins."""
    configs = np.asarray(configs, dtype=np.float64)
    if configs.ndim != 2 or configs.shape[1] != instance.n_spins:
        raise InvalidArgumentError(
            f"expected an array of shape (K, {instance.n_spins}), got {configs.shape}"
        )
    coupling = instance.coupling_matrix()
    interaction = 0.5 * np.einsum("ki,ij,kj->k", configs, coupling, configs)
    return -interaction - configs @ instance.field_vector()


def neighbors(config: Sequence[int], moves: MoveSet = MoveSet()) -> List[np.ndarray]:
    """
    Set S_x of configurations reachable from x in one proposal.

    For single-spin-flip the list has N entries, entry i having spin i flipped.
    """
    spins = np.asarray(config, dtype=np.int8)
    if moves.kind is MoveKind.SINGLE_FLIP:
        result = []
        for i in range(spins.size):
            flipped = spins.copy()
            flipped[i] = -flipped[i]
            result.append(flipped)
        return result
    own = state_index(spins)
    return [state for k, state in enumerate(enumerate_states(spins.size)) if k != own]


def _checked_bits(n: int, cap: int) -> int:
    if n < 1:
        raise InvalidArgumentError(f"number of spins must be positive, got {n}")
    if n > cap:
        raise CapacityError(n, cap)
    return n


def enumerate_states(n: int, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """
    All 2^n configurations in canonical order.

    State k has spin i equal to +1 when bit i of k is 0 and -1 otherwise,
    so state 0 is all +1 and the last state is all -1.

    Returns:
        np.ndarray: int8 array of shape (2^n, n).
    """
    _checked_bits(n, cap)
    bits = (np.arange(2 ** n, dtype=np.int64)[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


def state_index(config: Sequence[int]) -> int:
    """Canonical index of a configuration (inverse of enumerate_states)."""
    return int(states_to_indices(np.asarray(config)[None, :])[0])


def states_to_indices(configs: np.ndarray) -> np.ndarray:
    bits = (np.asarray(configs) < 0).astype(np.int64)
    return bits @ (1 << np.arange(bits.shape[1], dtype=np.int64))


def ground_states_bruteforce(instance: IsingInstance, cap: int = DEFAULT_ENUMERATION_CAP) -> GroundStates:
    """
    Exact global minimum of E0 and every minimiser, by full enumeration.

    Returns:
        GroundStates: e_min and the minimisers (rows, canonical order).
    """
    states = enumerate_states(instance.n_spins, cap)
    values = energies(instance, states)
    e_min = float(values.min())
    return GroundStates(e_min, states[values <= e_min + ENERGY_TOL])


def random_instance(
    n: int,
    distribution: str = "pm_j",
    seed: int = 0,
    sigma: float = 1.0,
    topology: str = "complete",
) -> IsingInstance:
    """
    Draws a spin-glass benchmark instance.

    Args:
        n (int): Number of spins.
        distribution (str): "pm_j" for J = +-1 with equal probability, or
            "gaussian" for J ~ N(0, sigma^2).
        seed (int): Seed of the generator; equal seeds give equal instances.
        sigma (float): Standard deviation for the gaussian distribution.
        topology (str): "complete" (all pairs) or "ring" (periodic chain).

    Returns:
        IsingInstance: Instance with zero longitudinal fields.
    """
    if n < 1:
        raise InvalidArgumentError(f"number of spins must be positive, got {n}")
    if topology == "complete":
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif topology == "ring":
        pairs = sorted({(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)}) if n > 1 else []
    else:
        raise InvalidArgumentError(f"Unsupported topology: {topology}")

    rng = np.random.default_rng(seed)
    if distribution == "pm_j":
        values = rng.choice(np.array([-1.0, 1.0]), size=len(pairs))
    elif distribution == "gaussian":
        values = rng.normal(0.0, sigma, size=len(pairs))
    else:
        raise InvalidArgumentError(f"Unsupported coupling distribution: {distribution}")

    return IsingInstance(
        n_spins=n,
        couplings=[(i, j, float(v)) for (i, j), v in zip(pairs, values)],
    )
