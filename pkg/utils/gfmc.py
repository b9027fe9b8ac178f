import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from utils.errors import CapacityError, ConfigurationError, InvalidArgumentError, ModelError
from utils.ising import (
    DEFAULT_ENUMERATION_CAP,
    IsingInstance,
    check_config,
    energies,
    energy,
    enumerate_states,
    ground_states_bruteforce,
    neighbors,
)
from utils.schedules import Control, Schedule

logger = logging.getLogger(__name__)

# tolerance on the traceless identity sum_x E0(x) = 0
TRACE_TOL = 1e-9

TRACE_COLUMNS = ["step", "gamma", "mean_weight", "effective_population", "best_energy", "histogram_entropy"]

FieldSource = Union[Schedule, float]


class GreenVariant(str, Enum):
    G1 = "G1"
    G2 = "G2"


class PopulationControl(BaseModel):
    """
    Optional split/kill step applied after every move.

    Walkers heavier than split_above * mean are split into floor(W / mean)
    copies sharing the weight; walkers lighter than kill_below * mean
    survive with probability W / (kill_below * mean) and are then raised
    to that threshold, so the total weight is preserved in expectation.
    """

    model_config = ConfigDict(frozen=True)

    kind: str = Field(default="none", pattern="^(none|split_kill)$")
    split_above: float = Field(default=2.0, gt=1.0)
    kill_below: float = Field(default=0.5, gt=0.0, lt=1.0)


class GfmcParams(BaseModel):
    """
    Fields:
        dt (float): Imaginary time step.
        e_t (float): Reference energy E_T.
        n_walkers (int): Initial number of walkers.
        variant (GreenVariant): G1 (linear) or G2 (exponential) Green's function.
        population_control (PopulationControl): Split/kill policy, off by default.
    """

    model_config = ConfigDict(frozen=True)

    dt: float = Field(gt=0.0)
    e_t: float = 0.0
    n_walkers: int = Field(default=1000, ge=1)
    variant: GreenVariant = GreenVariant.G1
    population_control: PopulationControl = PopulationControl()


def energy_range(instance: IsingInstance, cap: int = DEFAULT_ENUMERATION_CAP) -> Tuple[float, float]:
    """Exact (E_min, E_max) when enumerable, the coupling-sum bounds otherwise."""
    if instance.n_spins <= cap:
        values = energies(instance, enumerate_states(instance.n_spins, cap))
        return float(values.min()), float(values.max())
    bound = instance.energy_bound()
    return -bound, bound


def resolve_reference_energy(instance: IsingInstance, e_t: Union[float, str], cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """
    E_T from a number, "auto" (midpoint of the coupling-sum bounds) or
    "e_min" (brute-force ground energy).
    """
    if e_t == "auto":
        # the coupling-sum bounds are symmetric, -B <= E0 <= B
        return 0.0
    if e_t == "e_min":
        return ground_states_bruteforce(instance, cap).e_min
    if isinstance(e_t, str):
        raise ConfigurationError(f"e_t must be a number, 'auto' or 'e_min', got '{e_t}'")
    return float(e_t)


def default_dt(instance: IsingInstance, e_t: float, gamma0: float) -> float:
    """0.5 / (E_max - E_T + N Gamma(0)) with E_max from the coupling-sum bound."""
    scale = instance.energy_bound() - e_t + instance.n_spins * gamma0
    return 0.5 / max(scale, np.finfo(float).tiny)


def check_diagonal(instance: IsingInstance, params: GfmcParams, cap: int = DEFAULT_ENUMERATION_CAP) -> None:
    """
    Validates 1 - dt (E0(x) - E_T) >= 0 for every state x.

    Raises:
        ConfigurationError: Naming the first violating state, or the bound
            when the instance is too large to enumerate.
    """
    if params.variant is not GreenVariant.G1:
        return
    if instance.n_spins <= cap:
        states = enumerate_states(instance.n_spins, cap)
        diagonal = 1.0 - params.dt * (energies(instance, states) - params.e_t)
        bad = np.flatnonzero(diagonal < 0)
        if bad.size:
            raise ConfigurationError(
                f"Green's function diagonal is negative ({diagonal[bad[0]]:.6g}) at state "
                f"{states[bad[0]].tolist()}; decrease dt or raise e_t"
            )
    elif 1.0 - params.dt * (instance.energy_bound() - params.e_t) < 0:
        raise ConfigurationError("dt too large for the coupling-sum energy bound")


def _field(source: FieldSource, t) -> np.ndarray:
    if isinstance(source, Schedule):
        if source.control_kind is not Control.GAMMA:
            raise ConfigurationError("GFMC needs a transverse-field schedule (control 'gamma')")
        return source.evaluate(t).values
    if source < 0:
        raise InvalidArgumentError(f"transverse field must be non-negative, got {source}")
    return np.full(np.shape(t), float(source))


def _gamma(source: FieldSource, t: int) -> float:
    return float(_field(source, t))


def weight_w(x: Sequence[int], t: int, instance: IsingInstance, params: GfmcParams, schedule: FieldSource) -> float:
    """
    Walker weight w(x;t) = 1 - dt (E0(x) - E_T) + N dt Gamma(t).

    Larger for lower E0(x).
    """
    gamma = _gamma(schedule, t)
    return 1.0 - params.dt * (energy(instance, x) - params.e_t) + instance.n_spins * params.dt * gamma


def g1_hat(y: Sequence[int], x: Sequence[int], t: int, instance: IsingInstance, params: GfmcParams, schedule: FieldSource) -> float:
    """
    Matrix element of the linear Green's function 1 - dt (H - E_T).

    Returns:
        float: 1 - dt (E0(x) - E_T) on the diagonal, dt Gamma(t) between
        single-flip neighbours, 0 otherwise.
    """
    x = check_config(instance, x)
    y = check_config(instance, y)
    distance = int(np.count_nonzero(x != y))
    if distance == 0:
        diagonal = 1.0 - params.dt * (energy(instance, x) - params.e_t)
        if diagonal < 0:
            raise ConfigurationError(f"Green's function diagonal is negative at state {x.tolist()}")
        return diagonal
    if distance == 1:
        return params.dt * _gamma(schedule, t)
    return 0.0


class TransitionRow(NamedTuple):
    states: np.ndarray
    probabilities: np.ndarray


def g1_transition(x: Sequence[int], t: int, instance: IsingInstance, params: GfmcParams, schedule: FieldSource) -> TransitionRow:
    """
    Normalised transition G1(., x; t) over x and its single-flip neighbours.

    Returns:
        TransitionRow: states[0] is x itself (stay probability
        1 - N dt Gamma / w), states[1 + i] has spin i flipped (dt Gamma / w).
    """
    x = check_config(instance, x)
    gamma = _gamma(schedule, t)
    w = weight_w(x, t, instance, params, schedule)
    # zero diagonal and no field: the state is absorbing
    move = params.dt * gamma / w if w > 0 else 0.0
    stay = 1.0 - instance.n_spins * move
    if stay < 0:
        raise ConfigurationError(f"stay probability {stay:.6g} < 0 at state {x.tolist()}; dt too large")
    states = np.vstack([x[None, :]] + [y[None, :] for y in neighbors(x)])
    return TransitionRow(states, np.array([stay] + [move] * instance.n_spins))


def weights_all(instance: IsingInstance, params: GfmcParams, gamma: float, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """w(x;t) (G1) or w2(x;t) (G2) for every state in canonical order."""
    e0 = energies(instance, enumerate_states(instance.n_spins, cap))
    n = instance.n_spins
    if params.variant is GreenVariant.G2:
        return np.exp(params.dt * n * gamma - params.dt * e0)
    return 1.0 - params.dt * (e0 - params.e_t) + n * params.dt * gamma


def g1_hat_matrix(instance: IsingInstance, params: GfmcParams, gamma: float, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    n = instance.n_spins
    e0 = energies(instance, enumerate_states(n, cap))
    matrix = np.zeros((2 ** n, 2 ** n))
    index = np.arange(2 ** n)
    for bit in range(n):
        matrix[index ^ (1 << bit), index] = params.dt * gamma
    matrix[index, index] = 1.0 - params.dt * (e0 - params.e_t)
    return matrix


def g1_matrix(instance: IsingInstance, params: GfmcParams, gamma: float, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Column-stochastic G1 = g1_hat / w, columns are source states; a column with w = 0 stays put."""
    hat = g1_hat_matrix(instance, params, gamma, cap)
    w = hat.sum(axis=0, keepdims=True)
    return np.divide(hat, w, out=np.eye(hat.shape[0]), where=w > 0)


def _g2_factors(dt: float, gamma) -> Tuple[np.ndarray, np.ndarray]:
    # cosh(a)/e^a = (1 + e^-2a)/2 and cosh(a)/e^a tanh(a) = (1 - e^-2a)/2
    a = dt * np.asarray(gamma, dtype=np.float64)
    tail = -np.expm1(-2.0 * a)
    return 1.0 - 0.5 * tail, 0.5 * tail


def g2_transition(x: Sequence[int], y: Sequence[int], t: int, params: GfmcParams, schedule: FieldSource) -> float:
    """
    Exponential Green's function {cosh(dt Gamma)/e^(dt Gamma)}^N tanh^d(dt Gamma),
    d the Hamming distance; independent of E0.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise InvalidArgumentError("configurations have different lengths")
    distance = int(np.count_nonzero(x != y))
    stay, flip = _g2_factors(params.dt, _gamma(schedule, t))
    return float(stay ** (x.size - distance) * flip ** distance)


def g2_weight(x: Sequence[int], t: int, instance: IsingInstance, params: GfmcParams, schedule: FieldSource) -> float:
    """w2(x;t) = exp(dt N Gamma(t)) exp(-dt E0(x))."""
    gamma = _gamma(schedule, t)
    return float(np.exp(params.dt * instance.n_spins * gamma - params.dt * energy(instance, x)))


def g2_matrix(n_spins: int, params: GfmcParams, gamma: float, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Dense G2 as the N-fold tensor power of the per-spin [[stay, flip], [flip, stay]]."""
    if n_spins > cap:
        raise CapacityError(n_spins, cap)
    stay, flip = _g2_factors(params.dt, gamma)
    block = np.array([[stay, flip], [flip, stay]])
    matrix = np.ones((1, 1))
    for _ in range(n_spins):
        matrix = np.kron(block, matrix)
    return matrix


def green_hat_matrix(instance: IsingInstance, params: GfmcParams, gamma: float, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Unnormalised propagator: g1_hat for G1, G2 * w2 (column-wise) for G2."""
    if params.variant is GreenVariant.G2:
        return g2_matrix(instance.n_spins, params, gamma, cap) * weights_all(instance, params, gamma, cap)[None, :]
    return g1_hat_matrix(instance, params, gamma, cap)


def _check_traceless(e0: np.ndarray) -> None:
    scale = max(1.0, float(np.abs(e0).max()))
    if abs(e0.sum()) > TRACE_TOL * scale * e0.size:
        raise ModelError(f"sum of E0 over all states is {e0.sum():.3g}, not zero")


def stationary_q1_closed_form(t: int, instance: IsingInstance, params: GfmcParams, schedule: FieldSource, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """1/2^N - dt E0(x) / (2^N (1 + dt E_T + N dt Gamma(t)))."""
    n = instance.n_spins
    e0 = energies(instance, enumerate_states(n, cap))
    _check_traceless(e0)
    gamma = _gamma(schedule, t)
    size = 2.0 ** n
    return 1.0 / size - params.dt * e0 / (size * (1.0 + params.dt * params.e_t + n * params.dt * gamma))


def stationary_q1(t: int, instance: IsingInstance, params: GfmcParams, schedule: FieldSource, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """
    Stationary distribution of the G1 walk, q(x;t) = w(x;t) / sum_x w(x;t).

    The ratio form is checked against the closed form, which relies on
    sum_x E0(x) = 0 (true for pairwise couplings and fields).

    Raises:
        ModelError: If the two forms differ by more than 1e-12.
    """
    weights = weights_all(instance, params.model_copy(update={"variant": GreenVariant.G1}), _gamma(schedule, t), cap)
    ratio = weights / weights.sum()
    closed = stationary_q1_closed_form(t, instance, params, schedule, cap)
    gap = float(np.abs(ratio - closed).max())
    if gap > 1e-12:
        raise ModelError(f"stationary forms disagree by {gap:.3g}")
    return ratio


def iterate_exact(
    instance: IsingInstance,
    psi0: np.ndarray,
    schedule: FieldSource,
    params: GfmcParams,
    n: int,
    t0: int = 0,
    normalize: bool = False,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> np.ndarray:
    """
    Exact imaginary-time propagation psi_{k+1} = G_hat(t_k) psi_k.

    Args:
        instance (IsingInstance): Problem.
        psi0 (np.ndarray): Non-negative start vector over the canonical states.
        schedule (Schedule | float): Transverse field source.
        params (GfmcParams): dt, E_T and the variant.
        n (int): Number of steps.
        t0 (int): Step index of the first application.
        normalize (bool): Rescale to unit sum after every step.
        cap (int): Enumeration cap.

    Returns:
        np.ndarray: psi_n.
    """
    if instance.n_spins > cap:
        raise CapacityError(instance.n_spins, cap)
    size = 2 ** instance.n_spins
    psi = np.asarray(psi0, dtype=np.float64).copy()
    if psi.shape != (size,):
        raise InvalidArgumentError(f"psi0 must have {size} entries, got {psi.shape}")
    if np.any(psi < 0):
        raise InvalidArgumentError("psi0 must be entrywise non-negative")
    if n < 0:
        raise InvalidArgumentError("number of steps must be non-negative")
    for k in range(n):
        hat = green_hat_matrix(instance, params, _gamma(schedule, t0 + k), cap)
        if np.any(np.diag(hat) < 0):
            raise ConfigurationError(f"Green's function diagonal is negative at step {t0 + k}")
        psi = hat @ psi
        if normalize:
            psi /= psi.sum()
    return psi


@dataclass
class WalkerPopulation:
    """
    Weighted walkers; row i of configs carries weight weights[i] * exp(log_scale).
    """

    configs: np.ndarray
    weights: np.ndarray
    step: int = 0
    log_scale: float = 0.0

    def __post_init__(self):
        self.configs = np.asarray(self.configs, dtype=np.int8)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.configs.ndim != 2 or self.configs.shape[0] < 1:
            raise InvalidArgumentError("population needs at least one walker")
        if self.weights.shape != (self.configs.shape[0],):
            raise InvalidArgumentError("one weight per walker is required")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise InvalidArgumentError("walker weights must be positive and finite")

    @classmethod
    def uniform(cls, n_walkers: int, n_spins: int, rng: np.random.Generator) -> "WalkerPopulation":
        configs = 1 - 2 * rng.integers(0, 2, size=(n_walkers, n_spins))
        return cls(configs, np.ones(n_walkers))

    @property
    def size(self) -> int:
        return self.configs.shape[0]

    def effective_population(self) -> float:
        return float(self.weights.sum() ** 2 / np.sum(self.weights ** 2))

    def histogram(self, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
        """Normalised weighted histogram over the canonical states."""
        n = self.configs.shape[1]
        if n > cap:
            raise CapacityError(n, cap)
        index = (self.configs < 0).astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))
        counts = np.bincount(index, weights=self.weights, minlength=2 ** n)
        return counts / counts.sum()

    def distinct(self) -> Tuple[np.ndarray, np.ndarray]:
        """Distinct walker configurations and their total (relative) weight."""
        unique, inverse = np.unique(self.configs, axis=0, return_inverse=True)
        totals = np.bincount(inverse.reshape(-1), weights=self.weights)
        return unique, totals

    def entropy(self) -> float:
        _, totals = self.distinct()
        return float(stats.entropy(totals))

    def answer(self) -> np.ndarray:
        """Configuration with the largest weighted count."""
        unique, totals = self.distinct()
        return unique[int(np.argmax(totals))]


def _reweight(configs: np.ndarray, weights: np.ndarray, log_factor: np.ndarray, log_scale: float, step: int):
    """
    Multiplies exp(log_factor) into the weights in log space.

    The heaviest walker ends with weight 1 and the shift goes to log_scale.
    Walkers whose relative weight underflows to 0 are dropped.

    Raises:
        ConfigurationError: If every walker has zero weight.
    """
    with np.errstate(divide="ignore"):
        log_w = np.log(weights) + log_factor
    top = float(log_w.max())
    if not np.isfinite(top):
        raise ConfigurationError(
            f"every walker has zero weight at step {step}: zero Green's function diagonal without a transverse field"
        )
    weights = np.exp(log_w - top)
    alive = weights > 0
    if not alive.all():
        logger.debug("dropped %d walkers with vanishing weight at step %d", int(np.count_nonzero(~alive)), step)
    return configs[alive], weights[alive], log_scale + top


def _control_population(configs, weights, policy: PopulationControl, rng: np.random.Generator):
    mean = weights.mean()
    heavy = weights > policy.split_above * mean
    threshold = policy.kill_below * mean
    light = weights < threshold
    survive = ~light | (rng.random(weights.size) < weights / threshold)
    weights = np.where(light, threshold, weights)
    copies = np.where(heavy, np.floor(weights / mean), 1.0).astype(np.int64)
    copies[~survive] = 0
    if copies.sum() == 0:
        copies[int(np.argmax(weights))] = 1
    return np.repeat(configs, copies, axis=0), np.repeat(weights / np.maximum(copies, 1), copies)


def step_population(
    pop: WalkerPopulation,
    t: int,
    instance: IsingInstance,
    params: GfmcParams,
    schedule: FieldSource,
    rng: np.random.Generator,
) -> WalkerPopulation:
    """
    One Green's-function step: weight update with w(x;t), then a move.

    Each walker multiplies its weight by w(x;t) (w2 for G2) evaluated at
    its current position, then moves: G1 stays with probability
    1 - N dt Gamma / w and otherwise flips one uniformly chosen spin; G2
    flips every spin independently with probability (1 - e^(-2 dt Gamma)) / 2.
    Weights are kept relative to the heaviest walker, the common factor
    accumulating in log_scale; a walker at a state with w = 0 is absorbed
    and dropped. Population control, when enabled, runs last.

    Returns:
        WalkerPopulation: A new population at step t + 1.
    """
    gamma = _gamma(schedule, t)
    configs = pop.configs.copy()
    n_walkers, n_spins = configs.shape
    e0 = energies(instance, configs)

    if params.variant is GreenVariant.G2:
        log_factor = params.dt * n_spins * gamma - params.dt * e0
        _, flip = _g2_factors(params.dt, gamma)
        flips = rng.random((n_walkers, n_spins)) < flip
        configs = np.where(flips, -configs, configs).astype(np.int8)
    else:
        diagonal = 1.0 - params.dt * (e0 - params.e_t)
        if np.any(diagonal < 0):
            bad = int(np.argmax(diagonal < 0))
            raise ConfigurationError(f"Green's function diagonal is negative at state {configs[bad].tolist()}")
        hop = n_spins * params.dt * gamma
        w = diagonal + hop
        move = np.divide(hop, w, out=np.zeros_like(w), where=w > 0)
        moves = rng.random(n_walkers) < move
        sites = rng.integers(0, n_spins, size=n_walkers)
        rows = np.flatnonzero(moves)
        configs[rows, sites[rows]] = -configs[rows, sites[rows]]
        with np.errstate(divide="ignore"):
            log_factor = np.log(w)

    configs, weights, log_scale = _reweight(configs, pop.weights, log_factor, pop.log_scale, pop.step + 1)

    if params.population_control.kind == "split_kill":
        configs, weights = _control_population(configs, weights, params.population_control, rng)

    return WalkerPopulation(configs, weights, pop.step + 1, log_scale)


@dataclass
class GfmcTrace:
    frame: pd.DataFrame
    best_energy: float
    best_config: np.ndarray
    answer: np.ndarray
    first_hit_step: Optional[int]
    population: WalkerPopulation


def run_gfmc(
    instance: IsingInstance,
    params: GfmcParams,
    schedule: Schedule,
    horizon: int,
    seed: int,
    checkpoint_every: Optional[int] = None,
    e_target: Optional[float] = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> GfmcTrace:
    """
    Runs weighted walkers for t = 0 .. horizon-1 from uniformly random starts.

    Args:
        instance (IsingInstance): Problem to anneal.
        params (GfmcParams): Walker parameters (validated against the diagonal invariant).
        schedule (Schedule): Transverse field schedule.
        horizon (int): Number of steps, >= 1.
        seed (int): Seed of the run's generator.
        checkpoint_every (int): Steps between trace rows (default horizon/100).
        e_target (float): Known ground energy; enables first-hit detection.
        cap (int): Enumeration cap used for the diagonal check.

    Returns:
        GfmcTrace: Trace table, best energy visited and the weighted-histogram answer.
    """
    if horizon < 1:
        raise InvalidArgumentError(f"horizon must be at least 1, got {horizon}")
    every = checkpoint_every or max(1, horizon // 100)
    check_diagonal(instance, params, cap)
    rng = np.random.default_rng(seed)
    pop = WalkerPopulation.uniform(params.n_walkers, instance.n_spins, rng)

    e0 = energies(instance, pop.configs)
    best = int(np.argmin(e0))
    best_energy, best_config = float(e0[best]), pop.configs[best].copy()
    target = None if e_target is None else e_target + 1e-9
    first_hit = 0 if target is not None and best_energy <= target else None

    logger.info(
        "GFMC %s N=%d walkers=%d dt=%.4g E_T=%.4g horizon=%d seed=%d",
        params.variant.value, instance.n_spins, params.n_walkers, params.dt, params.e_t, horizon, seed,
    )
    rows = []
    for t in range(horizon):
        pop = step_population(pop, t, instance, params, schedule, rng)
        e0 = energies(instance, pop.configs)
        k = int(np.argmin(e0))
        if e0[k] < best_energy:
            best_energy, best_config = float(e0[k]), pop.configs[k].copy()
        if first_hit is None and target is not None and best_energy <= target:
            first_hit = t + 1
        if (t + 1) % every == 0 or t + 1 == horizon:
            rows.append({
                "step": t + 1,
                "gamma": _gamma(schedule, t),
                "mean_weight": float(pop.weights.mean()),
                "effective_population": pop.effective_population(),
                "best_energy": best_energy,
                "histogram_entropy": pop.entropy(),
            })

    return GfmcTrace(
        frame=pd.DataFrame(rows, columns=TRACE_COLUMNS),
        best_energy=best_energy,
        best_config=best_config,
        answer=pop.answer(),
        first_hit_step=first_hit,
        population=pop,
    )
