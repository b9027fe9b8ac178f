import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from numba import njit
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import logsumexp

from utils.errors import ConfigurationError, DomainError, InvalidArgumentError
from utils.ising import IsingInstance, energies, enumerate_states
from utils.schedules import Control, Schedule, trotter_coupling

logger = logging.getLogger(__name__)

# exponents are clipped to +-EXPONENT_CLAMP before exp()
EXPONENT_CLAMP = 700.0
DEFAULT_LAB_CAP = 12

TRACE_COLUMNS = [
    "step",
    "control_value",
    "mean_slice_energy",
    "best_energy",
    "acceptance_rate",
    "clamp_count",
    "bracket_reject_count",
]


class AcceptanceKind(str, Enum):
    HEAT_BATH = "heat_bath"
    METROPOLIS = "metropolis"
    TSALLIS = "tsallis"


class PimcParams(BaseModel):
    """
    Parameters of the Suzuki-Trotter replica chain.

    The classical term is simulated at T0 = 1/beta with F0 carrying the 1/M
    factor, so -F0/T0 is exactly the first exponent term of the Trotter
    partition function; the kinetic temperature is T1(t) = 1/gamma(t).

    Fields:
        beta (float): Inverse temperature.
        trotter_slices (int): Trotter number M.
        acceptance (AcceptanceKind): heat_bath, metropolis or tsallis.
        q (float): Tsallis parameter, required (> 1) for tsallis.
        g (AcceptanceKind): Acceptance function applied to the Tsallis u.
    """

    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0.0)
    trotter_slices: int = Field(ge=1)
    acceptance: AcceptanceKind = AcceptanceKind.HEAT_BATH
    q: Optional[float] = None
    g: AcceptanceKind = AcceptanceKind.HEAT_BATH

    @model_validator(mode="after")
    def _check_tsallis(self):
        if self.acceptance is AcceptanceKind.TSALLIS and (self.q is None or self.q <= 1.0):
            raise ValueError("tsallis acceptance requires q > 1")
        if self.g is AcceptanceKind.TSALLIS:
            raise ValueError("g must be heat_bath or metropolis")
        return self

    @property
    def T0(self) -> float:
        return 1.0 / self.beta

    @property
    def acceptance_function(self) -> AcceptanceKind:
        return self.g if self.acceptance is AcceptanceKind.TSALLIS else self.acceptance


@dataclass(frozen=True)
class ReplicaConfig:
    """
    N x M array of Trotter-replicated spins; slice index is periodic.
    """

    spins: np.ndarray

    def __post_init__(self):
        spins = np.asarray(self.spins)
        if spins.ndim != 2 or spins.shape[0] < 1 or spins.shape[1] < 1:
            raise InvalidArgumentError(f"replica spins must have shape (N, M), got {spins.shape}")
        if not np.all(np.abs(spins) == 1):
            raise InvalidArgumentError("replica spins must be exactly +1 or -1")
        object.__setattr__(self, "spins", spins.astype(np.int8))

    @property
    def n_spins(self) -> int:
        return self.spins.shape[0]

    @property
    def trotter_slices(self) -> int:
        return self.spins.shape[1]

    def flipped(self, i: int, k: int) -> "ReplicaConfig":
        spins = self.spins.copy()
        spins[i, k] = -spins[i, k]
        return ReplicaConfig(spins)

    def flat(self) -> np.ndarray:
        """Row-major flattening; spin (i, k) sits at position i * M + k."""
        return self.spins.reshape(-1)

    @classmethod
    def random(cls, n_spins: int, trotter_slices: int, rng: np.random.Generator) -> "ReplicaConfig":
        return cls(1 - 2 * rng.integers(0, 2, size=(n_spins, trotter_slices)))

    @classmethod
    def uniform(cls, n_spins: int, trotter_slices: int, value: int = 1) -> "ReplicaConfig":
        return cls(np.full((n_spins, trotter_slices), value))


def _check_replica(instance: IsingInstance, config: ReplicaConfig, params: Optional[PimcParams] = None) -> None:
    if config.n_spins != instance.n_spins:
        raise InvalidArgumentError(
            f"replica has {config.n_spins} spins per slice, instance has {instance.n_spins}"
        )
    if params is not None and config.trotter_slices != params.trotter_slices:
        raise InvalidArgumentError(
            f"replica has {config.trotter_slices} Trotter slices, params.trotter_slices is {params.trotter_slices}"
        )


def replica_states(n_spins: int, trotter_slices: int, cap: int = DEFAULT_LAB_CAP) -> np.ndarray:
    """All 2^(N M) replica configurations, shape (K, N, M), canonical order of the flattening."""
    return enumerate_states(n_spins * trotter_slices, cap).reshape(-1, n_spins, trotter_slices)


def replica_terms(instance: IsingInstance, configs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorised F0 and F1 over a stack of replica configurations.

    Args:
        instance (IsingInstance): Cost function of every slice.
        configs (np.ndarray): Array of shape (K, N, M).

    Returns:
        Tuple[np.ndarray, np.ndarray]: F0 and F1, each of shape (K,).
    """
    configs = np.asarray(configs)
    if configs.ndim != 3 or configs.shape[1] != instance.n_spins:
        raise InvalidArgumentError(f"expected replicas of shape (K, {instance.n_spins}, M), got {configs.shape}")
    n_configs, n_spins, n_slices = configs.shape
    slices = configs.transpose(0, 2, 1).reshape(n_configs * n_slices, n_spins)
    f0 = energies(instance, slices).reshape(n_configs, n_slices).sum(axis=1) / n_slices
    bonds = configs.astype(np.float64) * np.roll(configs, -1, axis=2)
    f1 = -bonds.sum(axis=(1, 2))
    return f0, f1


def replica_F0(instance: IsingInstance, config: ReplicaConfig) -> float:
    """
    Classical part F0(x) = -(1/M) sum_k [sum_{i<j} J_ij S_i^k S_j^k + sum_i h_i S_i^k].
    """
    _check_replica(instance, config)
    return float(replica_terms(instance, config.spins[None])[0][0])


def replica_F1(config: ReplicaConfig) -> float:
    """
    Kinetic part F1(x) = -sum_k sum_i S_i^k S_i^(k+1), slice M+1 being slice 1.

    For M = 2 each bond is counted twice (k=1->2 and k=2->1); for M = 1
    the term is the constant -N.
    """
    spins = config.spins.astype(np.float64)
    return float(-(spins * np.roll(spins, -1, axis=1)).sum())


def replica_l1(trotter_slices: int) -> float:
    """
    Largest |F1(y) - F1(x)| over single-flip proposals.

    A flip of S_i^k changes F1 by 2 S_i^k (S_i^(k-1) + S_i^(k+1)), so 4 for
    M >= 2 and 0 for M = 1 where F1 is constant.
    """
    if trotter_slices < 1:
        raise InvalidArgumentError(f"trotter_slices must be at least 1, got {trotter_slices}")
    return 4.0 if trotter_slices >= 2 else 0.0


def acceptance_g(kind: Union[str, AcceptanceKind], u: Union[float, np.ndarray]):
    """
    Acceptance function g(u): heat bath u/(1+u) or Metropolis min(1, u).

    Both satisfy g(1/u) = g(u)/u, which makes the Boltzmann factor stationary.
    """
    kind = AcceptanceKind(kind)
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(u_arr < 0):
        raise DomainError(f"acceptance argument must be non-negative, got {u}")
    if kind is AcceptanceKind.HEAT_BATH:
        with np.errstate(over="ignore", invalid="ignore"):
            result = np.where(np.isinf(u_arr), 1.0, u_arr / (1.0 + u_arr))
    elif kind is AcceptanceKind.METROPOLIS:
        result = np.minimum(1.0, u_arr)
    else:
        raise InvalidArgumentError("tsallis is not an acceptance function; use heat_bath or metropolis")
    return float(result) if result.ndim == 0 else result


def clip_exponent(exponent: np.ndarray) -> Tuple[np.ndarray, int]:
    exponent = np.asarray(exponent, dtype=np.float64)
    n_clamped = int(np.count_nonzero(np.abs(exponent) > EXPONENT_CLAMP))
    return np.clip(exponent, -EXPONENT_CLAMP, EXPONENT_CLAMP), n_clamped


def boltzmann_u(d_f0, d_f1, beta: float, coupling):
    """u = exp(-beta dF0 - gamma dF1) with a clipped exponent."""
    clipped, _ = clip_exponent(-beta * np.asarray(d_f0) - np.asarray(coupling) * np.asarray(d_f1))
    return np.exp(clipped)


def generalized_u(d_f0, d_f1, beta: float, coupling, q: float):
    """
    Tsallis-deformed ratio u = e^(-beta dF0) {1 + (q-1) gamma dF1}^(1/(1-q)).

    A non-positive bracket gives u = 0 (the move is rejected).
    """
    if q <= 1.0:
        raise ConfigurationError(f"tsallis acceptance requires q > 1, got {q}")
    bracket = 1.0 + (q - 1.0) * np.asarray(coupling) * np.asarray(d_f1)
    with np.errstate(divide="ignore", invalid="ignore"):
        exponent = -beta * np.asarray(d_f0) + np.log(np.where(bracket > 0, bracket, 1.0)) / (1.0 - q)
    clipped, _ = clip_exponent(exponent)
    u = np.where(bracket > 0, np.exp(clipped), 0.0)
    return float(u) if u.ndim == 0 else u


def trotter_couplings(schedule: Schedule, params: PimcParams, t) -> Tuple[np.ndarray, int]:
    """
    Slice coupling gamma(t) = 1/T1(t) implied by a schedule.

    Transverse-field schedules go through the Trotter mapping; kinetic
    temperature schedules are inverted directly.

    Returns:
        Tuple[np.ndarray, int]: Couplings and the number of clamped schedule values.
    """
    values, n_clamped = schedule.evaluate(t)
    control = schedule.control_kind
    if control is Control.GAMMA:
        return np.asarray(trotter_coupling(params.beta, params.trotter_slices, values)), n_clamped
    if control is Control.T1:
        return 1.0 / values, n_clamped
    raise ConfigurationError("a classical temperature schedule cannot drive the replica chain; use engine 'sa'")


def boltzmann_ratio(
    instance: IsingInstance, x: ReplicaConfig, y: ReplicaConfig, t: int, params: PimcParams, schedule: Schedule
) -> float:
    """
    q(y;t) / q(x;t) = exp(-[F0(y)-F0(x)]/T0 - [F1(y)-F1(x)]/T1(t)).

    The partition function cancels and is never computed.
    """
    _check_replica(instance, x)
    _check_replica(instance, y)
    coupling, _ = trotter_couplings(schedule, params, t)
    d_f0 = replica_F0(instance, y) - replica_F0(instance, x)
    d_f1 = replica_F1(y) - replica_F1(x)
    return float(boltzmann_u(d_f0, d_f1, params.beta, float(coupling)))


def tsallis_u(
    instance: IsingInstance, x: ReplicaConfig, y: ReplicaConfig, t: int, params: PimcParams, schedule: Schedule
) -> float:
    """Generalized acceptance argument u(y, x; t) of the Tsallis chain."""
    if params.q is None or params.q <= 1.0:
        raise ConfigurationError(f"tsallis acceptance requires q > 1, got {params.q}")
    _check_replica(instance, x)
    _check_replica(instance, y)
    coupling, _ = trotter_couplings(schedule, params, t)
    d_f0 = replica_F0(instance, y) - replica_F0(instance, x)
    d_f1 = replica_F1(y) - replica_F1(x)
    return float(generalized_u(d_f0, d_f1, params.beta, float(coupling), params.q))


def boltzmann_distribution(instance: IsingInstance, params: PimcParams, coupling: float, configs: np.ndarray) -> np.ndarray:
    """
    Normalised q(x;t) proportional to exp(-F0(x)/T0 - gamma F1(x)) over the given replicas.
    """
    f0, f1 = replica_terms(instance, configs)
    logits = -params.beta * f0 - coupling * f1
    return np.exp(logits - logsumexp(logits))


# stats slots filled by the kernel
_ACCEPTED, _CLAMPED, _BRACKET, _BEST, _FIRST_HIT = range(5)


@njit(cache=True)
def _replica_kernel(
    spins, coupling, field, betas, gammas, sites, slices, uniforms,
    tsallis, heat_bath, q, slice_energy, best_config, stats, t0, e_target,
):
    n_spins, n_slices = spins.shape
    for step in range(sites.shape[0]):
        i = sites[step]
        k = slices[step]
        s = spins[i, k]
        local = field[i]
        for j in range(n_spins):
            local += coupling[i, j] * spins[j, k]
        d_energy = 2.0 * s * local
        d_f0 = d_energy / n_slices
        if n_slices == 1:
            d_f1 = 0.0
        else:
            d_f1 = 2.0 * s * (spins[i, (k + n_slices - 1) % n_slices] + spins[i, (k + 1) % n_slices])

        if tsallis:
            bracket = 1.0 + (q - 1.0) * gammas[step] * d_f1
            if bracket <= 0.0:
                stats[_BRACKET] += 1.0
                continue
            exponent = -betas[step] * d_f0 + np.log(bracket) / (1.0 - q)
        else:
            exponent = -betas[step] * d_f0 - gammas[step] * d_f1
        if exponent > EXPONENT_CLAMP:
            exponent = EXPONENT_CLAMP
            stats[_CLAMPED] += 1.0
        elif exponent < -EXPONENT_CLAMP:
            exponent = -EXPONENT_CLAMP
            stats[_CLAMPED] += 1.0
        u = np.exp(exponent)
        if heat_bath:
            accept = u / (1.0 + u)
        else:
            accept = min(1.0, u)

        if uniforms[step] < accept:
            spins[i, k] = -s
            slice_energy[k] += d_energy
            stats[_ACCEPTED] += 1.0
            if slice_energy[k] < stats[_BEST]:
                stats[_BEST] = slice_energy[k]
                for j in range(n_spins):
                    best_config[j] = spins[j, k]
            if stats[_FIRST_HIT] < 0.0 and slice_energy[k] <= e_target:
                stats[_FIRST_HIT] = t0 + step + 1


class SweepStats:
    """Running counters of a replica chain, shared across calls."""

    def __init__(self, n_spins: int):
        self.raw = np.array([0.0, 0.0, 0.0, np.inf, -1.0])
        self.best_config = np.zeros(n_spins, dtype=np.int8)
        self.proposals = 0

    @property
    def accepted(self) -> int:
        return int(self.raw[_ACCEPTED])

    @property
    def clamped(self) -> int:
        return int(self.raw[_CLAMPED])

    @property
    def bracket_rejects(self) -> int:
        return int(self.raw[_BRACKET])

    @property
    def best_energy(self) -> float:
        return float(self.raw[_BEST])

    @property
    def first_hit_step(self) -> Optional[int]:
        return None if self.raw[_FIRST_HIT] < 0 else int(self.raw[_FIRST_HIT])


class _ReplicaChain:
    """Mutable replica chain state driven by pre-drawn random numbers."""

    def __init__(self, instance, state: ReplicaConfig, tsallis: bool, heat_bath: bool, q: float, e_target: float):
        self.coupling = instance.coupling_matrix()
        self.field = instance.field_vector()
        self.instance = instance
        self.spins = state.spins.copy()
        self.tsallis = tsallis
        self.heat_bath = heat_bath
        self.q = q
        self.e_target = e_target
        self.stats = SweepStats(instance.n_spins)
        self.slice_energy = self._exact_slice_energies()
        self._note_best(0)

    def _exact_slice_energies(self) -> np.ndarray:
        return energies(self.instance, self.spins.T)

    def _note_best(self, t: int) -> None:
        k = int(np.argmin(self.slice_energy))
        if self.slice_energy[k] < self.stats.raw[_BEST]:
            self.stats.raw[_BEST] = self.slice_energy[k]
            self.stats.best_config[:] = self.spins[:, k]
        if self.stats.raw[_FIRST_HIT] < 0 and self.slice_energy[k] <= self.e_target:
            self.stats.raw[_FIRST_HIT] = t

    def advance(self, t0: int, betas: np.ndarray, gammas: np.ndarray, rng: np.random.Generator) -> None:
        n = betas.shape[0]
        n_spins, n_slices = self.spins.shape
        sites = rng.integers(0, n_spins, size=n)
        slices = rng.integers(0, n_slices, size=n)
        uniforms = rng.random(n)
        _replica_kernel(
            self.spins, self.coupling, self.field, betas, gammas, sites, slices, uniforms,
            self.tsallis, self.heat_bath, float(self.q), self.slice_energy, self.stats.best_config,
            self.stats.raw, int(t0), float(self.e_target),
        )
        self.stats.proposals += n
        # refresh against accumulated rounding
        self.slice_energy = self._exact_slice_energies()


def _chain_for(instance, params: PimcParams, state: ReplicaConfig, e_target: Optional[float]) -> _ReplicaChain:
    return _ReplicaChain(
        instance,
        state,
        tsallis=params.acceptance is AcceptanceKind.TSALLIS,
        heat_bath=params.acceptance_function is AcceptanceKind.HEAT_BATH,
        q=params.q or 1.0,
        e_target=-np.inf if e_target is None else e_target + 1e-9,
    )


def mc_sweep(
    instance: IsingInstance,
    state: ReplicaConfig,
    t: int,
    params: PimcParams,
    schedule: Schedule,
    rng: np.random.Generator,
    stats: Optional[SweepStats] = None,
) -> ReplicaConfig:
    """
    N*M single-spin-flip proposals starting at chain step t.

    Each proposal picks a site and a slice uniformly at random and accepts
    with g(q(y)/q(x)) or g(u) for the Tsallis chain; the schedule is read
    once per proposal, so the chain step advances by N*M.

    Args:
        instance (IsingInstance): Classical couplings.
        state (ReplicaConfig): Current replica configuration.
        t (int): Chain step of the first proposal.
        params (PimcParams): Chain parameters.
        schedule (Schedule): Transverse field or T1 schedule.
        rng (np.random.Generator): Stream owned by this chain.
        stats (SweepStats): Optional counters to accumulate into.

    Returns:
        ReplicaConfig: The configuration after the sweep.
    """
    _check_replica(instance, state, params)
    chain = _chain_for(instance, params, state, None)
    n = state.n_spins * state.trotter_slices
    steps = np.arange(t, t + n)
    gammas, _ = trotter_couplings(schedule, params, steps)
    chain.advance(t, np.full(n, params.beta), np.asarray(gammas, dtype=np.float64), rng)
    if stats is not None:
        stats.raw[:3] += chain.stats.raw[:3]
        stats.proposals += n
        if chain.stats.best_energy < stats.best_energy:
            stats.raw[_BEST] = chain.stats.raw[_BEST]
            stats.best_config[:] = chain.stats.best_config
    return ReplicaConfig(chain.spins)


@dataclass
class AnnealTrace:
    """
    Checkpointed history of one annealing run.

    frame holds one row per checkpoint with TRACE_COLUMNS; acceptance_rate
    is measured over the preceding interval, clamp and bracket counts are
    cumulative.
    """

    frame: pd.DataFrame
    best_energy: float
    best_config: np.ndarray
    first_hit_step: Optional[int]
    final_state: ReplicaConfig
    proposals: int
    states: List[ReplicaConfig] = field(default_factory=list)

    @property
    def sweeps(self) -> float:
        return self.proposals / self.final_state.spins.size


Observer = Callable[[dict, ReplicaConfig], None]


def _checkpoints(horizon: int, checkpoint_every: Optional[int]) -> List[int]:
    if horizon < 1:
        raise InvalidArgumentError(f"horizon must be at least 1, got {horizon}")
    every = checkpoint_every or max(1, horizon // 100)
    if every < 1:
        raise InvalidArgumentError("checkpoint_every must be positive")
    marks = list(range(every, horizon, every))
    return marks + [horizon]


def _run_chain(
    chain: _ReplicaChain,
    control: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray, int]],
    horizon: int,
    rng: np.random.Generator,
    observers: Sequence[Observer],
    checkpoint_every: Optional[int],
    record_states: bool,
) -> AnnealTrace:
    rows = []
    states = []
    schedule_clamps = 0
    start = 0
    for stop in _checkpoints(horizon, checkpoint_every):
        steps = np.arange(start, stop)
        control_values, betas, gammas, n_clamped = control(steps)
        schedule_clamps += n_clamped
        accepted_before = chain.stats.accepted
        chain.advance(start, betas, gammas, rng)
        row = {
            "step": stop,
            "control_value": float(control_values[-1]),
            "mean_slice_energy": float(chain.slice_energy.mean()),
            "best_energy": chain.stats.best_energy,
            "acceptance_rate": (chain.stats.accepted - accepted_before) / (stop - start),
            "clamp_count": chain.stats.clamped + schedule_clamps,
            "bracket_reject_count": chain.stats.bracket_rejects,
        }
        rows.append(row)
        snapshot = ReplicaConfig(chain.spins)
        if record_states:
            states.append(snapshot)
        for observer in observers:
            observer(row, snapshot)
        logger.debug("step %d best %.6g clamps %d", stop, row["best_energy"], row["clamp_count"])
        start = stop

    return AnnealTrace(
        frame=pd.DataFrame(rows, columns=TRACE_COLUMNS),
        best_energy=chain.stats.best_energy,
        best_config=chain.stats.best_config.copy(),
        first_hit_step=chain.stats.first_hit_step,
        final_state=ReplicaConfig(chain.spins),
        proposals=chain.stats.proposals,
        states=states,
    )


def run_annealing(
    instance: IsingInstance,
    params: PimcParams,
    schedule: Schedule,
    horizon: int,
    seed: int,
    observers: Sequence[Observer] = (),
    checkpoint_every: Optional[int] = None,
    e_target: Optional[float] = None,
    initial: Optional[ReplicaConfig] = None,
    record_states: bool = False,
) -> AnnealTrace:
    """
    Runs the inhomogeneous replica chain for t = 0 .. horizon-1 proposals.

    Args:
        instance (IsingInstance): Problem to anneal.
        params (PimcParams): Chain parameters.
        schedule (Schedule): Gamma(t) or T1(t) schedule.
        horizon (int): Number of proposals (chain steps), >= 1.
        seed (int): Seed of the chain's own generator.
        observers (Sequence[Observer]): Called with (row, state) at each checkpoint.
        checkpoint_every (int): Proposals between checkpoints (default horizon/100).
        e_target (float): Known ground energy; enables first-hit detection.
        initial (ReplicaConfig): Starting state (default: uniformly random,
            i.e. the ground state of the transverse-field term).
        record_states (bool): Keep a copy of the state at each checkpoint.

    Returns:
        AnnealTrace: Checkpoint table plus best classical energy seen over all slices.
    """
    _checkpoints(horizon, checkpoint_every)
    rng = np.random.default_rng(seed)
    state = initial or ReplicaConfig.random(instance.n_spins, params.trotter_slices, rng)
    _check_replica(instance, state, params)
    chain = _chain_for(instance, params, state, e_target)

    def control(steps):
        values, n_clamped = schedule.evaluate(steps)
        gammas, _ = trotter_couplings(schedule, params, steps)
        return values, np.full(steps.size, params.beta), np.asarray(gammas, dtype=np.float64), n_clamped

    logger.info(
        "PIMC anneal N=%d M=%d schedule=%s horizon=%d seed=%d",
        instance.n_spins, params.trotter_slices, schedule.label, horizon, seed,
    )
    return _run_chain(chain, control, horizon, rng, observers, checkpoint_every, record_states)


def run_classical_annealing(
    instance: IsingInstance,
    schedule: Schedule,
    horizon: int,
    seed: int,
    acceptance: Union[str, AcceptanceKind] = AcceptanceKind.HEAT_BATH,
    observers: Sequence[Observer] = (),
    checkpoint_every: Optional[int] = None,
    e_target: Optional[float] = None,
    initial: Optional[Sequence[int]] = None,
) -> AnnealTrace:
    """
    Simulated annealing baseline: single-spin flips on E0 at temperature T(t).

    Runs on the same kernel as the replica chain with one slice, so the
    trace has the same columns; control_value is T(t).
    """
    acceptance = AcceptanceKind(acceptance)
    if acceptance is AcceptanceKind.TSALLIS:
        raise ConfigurationError("simulated annealing supports heat_bath or metropolis acceptance")
    if schedule.control_kind is Control.GAMMA:
        raise ConfigurationError("simulated annealing needs a temperature schedule (control T or T1)")
    _checkpoints(horizon, checkpoint_every)
    rng = np.random.default_rng(seed)
    if initial is None:
        state = ReplicaConfig.random(instance.n_spins, 1, rng)
    else:
        state = ReplicaConfig(np.asarray(initial).reshape(-1, 1))
    _check_replica(instance, state)
    params = PimcParams(beta=1.0, trotter_slices=1, acceptance=acceptance)
    chain = _chain_for(instance, params, state, e_target)

    def control(steps):
        values, n_clamped = schedule.evaluate(steps)
        return values, 1.0 / values, np.zeros(steps.size), n_clamped

    logger.info("SA anneal N=%d schedule=%s horizon=%d seed=%d", instance.n_spins, schedule.label, horizon, seed)
    return _run_chain(chain, control, horizon, rng, observers, checkpoint_every, False)
