import logging
from enum import Enum
from typing import Dict, NamedTuple, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from utils.errors import DomainError, InvalidArgumentError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, int, np.ndarray]

# values below the floor are clamped; gamma(t) is finite down to this floor
SCHEDULE_FLOOR = 1e-300
DEFAULT_B = 1.0


def _out(values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(values) == 0 else values


def _positive(name: str, value: ArrayLike) -> None:
    if np.any(np.asarray(value) <= 0):
        raise DomainError(f"{name} must be positive, got {value}")


def trotter_coupling(beta: float, M: int, gamma_field: ArrayLike) -> ArrayLike:
    """
    Ferromagnetic coupling between adjacent Trotter slices,
    gamma = 1/2 log coth(beta * Gamma / M).

    Evaluated as -1/2 log tanh(a) with the branch chosen so both small and
    large a keep full relative precision.

    Args:
        beta (float): Inverse temperature.
        M (int): Trotter number.
        gamma_field (float | np.ndarray): Transverse field Gamma > 0.

    Returns:
        float | np.ndarray: The coupling, strictly decreasing in Gamma.
    """
    _positive("beta", beta)
    _positive("M", M)
    _positive("Gamma", gamma_field)
    a = beta * np.asarray(gamma_field, dtype=np.float64) / M
    tail = np.exp(-2.0 * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = np.log(-np.expm1(-2.0 * a)) - np.log1p(tail)
        large = np.log1p(-tail) - np.log1p(tail)
    return _out(-0.5 * np.where(a < 0.5, small, large))


def inverse_trotter_coupling(beta: float, M: int, coupling: ArrayLike) -> ArrayLike:
    """
    Transverse field that produces a given slice coupling,
    Gamma = (M / beta) artanh(exp(-2 gamma)).
    """
    _positive("beta", beta)
    _positive("M", M)
    _positive("gamma", coupling)
    g = np.asarray(coupling, dtype=np.float64)
    y = np.exp(-2.0 * g)
    # artanh(y) = (log1p(y) - log(1 - y)) / 2 with 1 - y taken from expm1 near y = 1
    with np.errstate(divide="ignore", invalid="ignore"):
        log_one_minus_y = np.where(g < 0.5, np.log(-np.expm1(-2.0 * g)), np.log1p(-y))
    return _out((M / beta) * 0.5 * (np.log1p(y) - log_one_minus_y))


def corollary1_gamma(t: ArrayLike, M: int, beta: float, R: int, L1: float) -> ArrayLike:
    """
    Slowest-certified transverse field of the path-integral chain,
    Gamma(t) = (M / beta) artanh((t + 2)^(-2 / (R L1))).

    Computed as the field whose Trotter coupling is log(t + 2) / (R L1),
    i.e. the boundary T1(t) = R L1 / log(t + 2).
    """
    _positive("R", R)
    _positive("L1", L1)
    t = np.asarray(t, dtype=np.float64)
    return inverse_trotter_coupling(beta, M, np.log(t + 2.0) / (R * L1))


def power_gamma(t: ArrayLike, M: int, beta: float, R: int, L1: float) -> ArrayLike:
    """Large-t form of the corollary schedule, (M / beta) (t + 2)^(-2 / (R L1))."""
    _positive("beta", beta)
    _positive("R", R)
    _positive("L1", L1)
    t = np.asarray(t, dtype=np.float64)
    return _out((M / beta) * (t + 2.0) ** (-2.0 / (R * L1)))


def theorem3_T1(t: ArrayLike, R: int, L1: float) -> ArrayLike:
    """Boundary kinetic temperature T1(t) = R L1 / log(t + 2)."""
    _positive("R", R)
    _positive("L1", L1)
    t = np.asarray(t, dtype=np.float64)
    return _out(R * L1 / np.log(t + 2.0))


def geman_geman_T(t: ArrayLike, n_size: float) -> ArrayLike:
    """Classical annealing temperature N / log(t + 1); needs t > 0."""
    _positive("t", t)
    _positive("N", n_size)
    t = np.asarray(t, dtype=np.float64)
    return _out(n_size / np.log(t + 1.0))


def tsallis_T1(t: ArrayLike, b: float = DEFAULT_B, c: float = 1.0) -> ArrayLike:
    """Power-law kinetic temperature b / (t + 2)^c for the generalized acceptance."""
    _positive("b", b)
    _positive("c", c)
    t = np.asarray(t, dtype=np.float64)
    return _out(b / (t + 2.0) ** c)


def tsallis_gamma(t: ArrayLike, b: float, c: float, M: int, beta: float) -> ArrayLike:
    """Transverse-field form (M / beta) exp(-2 (t + 2)^c / b)."""
    _positive("b", b)
    _positive("c", c)
    _positive("beta", beta)
    t = np.asarray(t, dtype=np.float64)
    return _out((M / beta) * np.exp(-2.0 * (t + 2.0) ** c / b))


def tsallis_certified(c: float, q: float, R: int) -> bool:
    """Whether 0 < c <= (q - 1) / R, the weak-ergodicity range."""
    return 0.0 < c <= (q - 1.0) / R


def gfmc_gamma(t: ArrayLike, b: float = DEFAULT_B, c: float = 1.0, N: int = 1) -> ArrayLike:
    """Green's function boundary Gamma(t) = b / (t + 1)^c."""
    _positive("b", b)
    _positive("c", c)
    _positive("N", N)
    t = np.asarray(t, dtype=np.float64)
    return _out(b / (t + 1.0) ** c)


def gfmc_certified(c: float, N: int) -> bool:
    return 0.0 < c <= 1.0 / N


def gfmc_g2_gamma(t: ArrayLike, b: float, dt: float, N: int) -> ArrayLike:
    """
    Boundary field of the exponential Green's function,
    Gamma(t) = -1/(2 dt) log(1 - 2 b (t + 1)^(-1/N)).

    Raises:
        DomainError: If 2 b (t + 1)^(-1/N) >= 1 at some requested t.
    """
    _positive("b", b)
    _positive("dt", dt)
    _positive("N", N)
    t = np.asarray(t, dtype=np.float64)
    x = 2.0 * b * (t + 1.0) ** (-1.0 / N)
    if np.any(x >= 1.0):
        raise DomainError(
            f"G2 schedule undefined before t = {first_defined_step(b, N)} for b={b}, N={N}"
        )
    return _out(-np.log1p(-x) / (2.0 * dt))


def first_defined_step(b: float, N: int) -> int:
    """Smallest integer t with 2 b (t + 1)^(-1/N) < 1."""
    t = max(int(np.floor((2.0 * b) ** N)) - 1, 0)
    while 2.0 * b * (t + 1.0) ** (-1.0 / N) >= 1.0:
        t += 1
    return t


def exponential_T1(t: ArrayLike, b: float = DEFAULT_B, rate: float = 1.0) -> ArrayLike:
    """Deliberately fast T1(t) = b exp(-rate t), far below every certified bound."""
    _positive("b", b)
    _positive("rate", rate)
    t = np.asarray(t, dtype=np.float64)
    return _out(b * np.exp(-rate * t))


def time_to_threshold(delta: float, variant: str, **params: float) -> float:
    """
    Order-of-magnitude number of steps for the transverse field to reach delta.

    pimc_t1:    exp((R L1 / 2) log(M / (beta delta))), params R, L1, M, beta
                (or RL1 instead of R and L1).
    tsallis_t2: exp(N log(log(1 / delta))), params N.

    These are asymptotic scalings, not exact step counts.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if variant == "pimc_t1":
        rl1 = params["RL1"] if "RL1" in params else params["R"] * params["L1"]
        _positive("R*L1", rl1)
        return float(np.exp(0.5 * rl1 * np.log(params["M"] / (params["beta"] * delta))))
    if variant == "tsallis_t2":
        _positive("N", params["N"])
        return float(np.exp(params["N"] * np.log(np.log(1.0 / delta))))
    raise InvalidArgumentError(f"Unknown threshold variant: {variant}")


class ScheduleKind(str, Enum):
    COROLLARY1 = "corollary1"
    POWER_GAMMA = "power_gamma"
    THEOREM3_T1 = "theorem3_T1"
    LOG_INVERSE_T = "log_inverse_T"
    TSALLIS_T1 = "tsallis_T1"
    TSALLIS_GAMMA = "tsallis_gamma"
    GFMC_POWER = "gfmc_power"
    GFMC_G2 = "gfmc_g2"
    EXPONENTIAL_T1 = "exponential_T1"
    CONSTANT = "constant"


class Control(str, Enum):
    """Which control parameter a schedule produces."""

    GAMMA = "gamma"  # transverse field
    T1 = "T1"  # kinetic temperature of the replica chain
    T = "T"  # classical annealing temperature


class Direction(str, Enum):
    DECREASING = "decreasing"
    INCREASING = "increasing"
    CONSTANT = "constant"


_REQUIRED = {
    ScheduleKind.COROLLARY1: ("M", "beta", "R", "L1"),
    ScheduleKind.POWER_GAMMA: ("M", "beta", "R", "L1"),
    ScheduleKind.THEOREM3_T1: ("R", "L1"),
    ScheduleKind.LOG_INVERSE_T: ("N",),
    ScheduleKind.TSALLIS_T1: ("c",),
    ScheduleKind.TSALLIS_GAMMA: ("c", "M", "beta"),
    ScheduleKind.GFMC_POWER: ("c", "N"),
    ScheduleKind.GFMC_G2: ("dt", "N"),
    ScheduleKind.EXPONENTIAL_T1: (),
    ScheduleKind.CONSTANT: ("value",),
}

_CONTROL = {
    ScheduleKind.COROLLARY1: Control.GAMMA,
    ScheduleKind.POWER_GAMMA: Control.GAMMA,
    ScheduleKind.THEOREM3_T1: Control.T1,
    ScheduleKind.LOG_INVERSE_T: Control.T,
    ScheduleKind.TSALLIS_T1: Control.T1,
    ScheduleKind.TSALLIS_GAMMA: Control.GAMMA,
    ScheduleKind.GFMC_POWER: Control.GAMMA,
    ScheduleKind.GFMC_G2: Control.GAMMA,
    ScheduleKind.EXPONENTIAL_T1: Control.T1,
}


class ScheduleValues(NamedTuple):
    values: np.ndarray
    n_clamped: int


class Schedule(BaseModel):
    """
    A named annealing schedule t -> control value.

    The certified schedules are evaluated at their boundary (equality).
    `scale` multiplies the value; scale < 1 produces a faster schedule than
    the certified one. `offset` shifts the time origin, value(t) = f(t + offset),
    for schedules that are undefined at small t.

    Fields:
        kind (ScheduleKind): Closed form to evaluate.
        params (Dict[str, float]): Named constants of the closed form.
        scale (float): Multiplicative factor applied to the value.
        offset (int): Time shift applied before evaluation.
        control (Control): Only for constant schedules; derived otherwise.
    """

    model_config = ConfigDict(frozen=True)

    kind: ScheduleKind
    params: Dict[str, float] = Field(default_factory=dict)
    scale: float = Field(default=1.0, gt=0.0)
    offset: int = Field(default=0, ge=0)
    control: Optional[Control] = None

    @model_validator(mode="after")
    def _check_params(self):
        missing = [name for name in _REQUIRED[self.kind] if name not in self.params]
        if missing:
            raise ValueError(f"schedule '{self.kind.value}' is missing params {missing}")
        if self.kind is not ScheduleKind.CONSTANT and self.control not in (None, _CONTROL[self.kind]):
            raise ValueError(f"schedule '{self.kind.value}' always controls {_CONTROL[self.kind].value}")
        if self.kind is ScheduleKind.CONSTANT and self.params["value"] <= 0:
            raise ValueError("constant schedule value must be positive")
        return self

    @property
    def control_kind(self) -> Control:
        if self.kind is ScheduleKind.CONSTANT:
            return self.control or Control.GAMMA
        return _CONTROL[self.kind]

    @property
    def direction(self) -> Direction:
        return Direction.CONSTANT if self.kind is ScheduleKind.CONSTANT else Direction.DECREASING

    @property
    def label(self) -> str:
        suffix = "" if self.scale == 1.0 else f"x{self.scale:g}"
        return f"{self.kind.value}{suffix}"

    @property
    def certified(self) -> bool:
        """True when the schedule is at or above a convergence boundary."""
        p = self.params
        if self.kind in (ScheduleKind.CONSTANT, ScheduleKind.EXPONENTIAL_T1):
            return False
        if self.kind in (ScheduleKind.TSALLIS_T1, ScheduleKind.TSALLIS_GAMMA) and "q" in p and "R" in p:
            return self.scale >= 1.0 and tsallis_certified(p["c"], p["q"], p["R"])
        if self.kind is ScheduleKind.GFMC_POWER:
            return self.scale >= 1.0 and gfmc_certified(p["c"], p["N"])
        return self.scale >= 1.0

    def _raw(self, t: np.ndarray) -> np.ndarray:
        p = self.params
        b = p.get("b", DEFAULT_B)
        if self.kind is ScheduleKind.COROLLARY1:
            return corollary1_gamma(t, p["M"], p["beta"], p["R"], p["L1"])
        if self.kind is ScheduleKind.POWER_GAMMA:
            return power_gamma(t, p["M"], p["beta"], p["R"], p["L1"])
        if self.kind is ScheduleKind.THEOREM3_T1:
            return theorem3_T1(t, p["R"], p["L1"])
        if self.kind is ScheduleKind.LOG_INVERSE_T:
            # shifted by one so the first step is finite
            return geman_geman_T(t + 1.0, p["N"])
        if self.kind is ScheduleKind.TSALLIS_T1:
            return tsallis_T1(t, b, p["c"])
        if self.kind is ScheduleKind.TSALLIS_GAMMA:
            return tsallis_gamma(t, b, p["c"], p["M"], p["beta"])
        if self.kind is ScheduleKind.GFMC_POWER:
            return gfmc_gamma(t, b, p["c"], p["N"])
        if self.kind is ScheduleKind.GFMC_G2:
            return gfmc_g2_gamma(t, b, p["dt"], p["N"])
        if self.kind is ScheduleKind.EXPONENTIAL_T1:
            return exponential_T1(t, b, p.get("rate", 1.0))
        return np.full(np.shape(t), p["value"], dtype=np.float64)

    def evaluate(self, t: ArrayLike) -> ScheduleValues:
        """
        Evaluates the schedule and clamps underflow to SCHEDULE_FLOOR.

        Args:
            t (int | np.ndarray): Monte Carlo step index (>= 0).

        Returns:
            ScheduleValues: Values as an array and how many were clamped.
        """
        steps = np.asarray(t, dtype=np.float64)
        if np.any(steps < 0):
            raise InvalidArgumentError("schedule time must be non-negative")
        values = np.asarray(self._raw(steps + self.offset), dtype=np.float64) * self.scale
        low = values < SCHEDULE_FLOOR
        n_clamped = int(np.count_nonzero(low))
        if n_clamped:
            logger.warning("Schedule %s clamped %d value(s) to %g", self.label, n_clamped, SCHEDULE_FLOOR)
            values = np.where(low, SCHEDULE_FLOOR, values)
        return ScheduleValues(values, n_clamped)

    def value(self, t: ArrayLike) -> ArrayLike:
        return _out(self.evaluate(t).values)
