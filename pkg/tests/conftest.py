import numpy as np
import pytest

from utils.gfmc import GfmcParams, GreenVariant
from utils.ising import IsingInstance, random_instance
from utils.lab import ChainKind, ChainSpec
from utils.pimc import AcceptanceKind, PimcParams
from utils.schedules import Schedule, ScheduleKind


@pytest.fixture
def ferro2() -> IsingInstance:
    return IsingInstance(n_spins=2, couplings=[(0, 1, 1.0)])


@pytest.fixture
def triangle() -> IsingInstance:
    return IsingInstance(n_spins=3, couplings=[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


@pytest.fixture
def glass4() -> IsingInstance:
    return random_instance(4, "pm_j", seed=7)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def theorem3_schedule(n_spins: int, trotter_slices: int) -> Schedule:
    return Schedule(kind=ScheduleKind.THEOREM3_T1, params={"R": n_spins * trotter_slices, "L1": 4.0})


def corollary1_schedule(n_spins: int, trotter_slices: int, beta: float = 1.0, scale: float = 1.0) -> Schedule:
    params = {"M": trotter_slices, "beta": beta, "R": n_spins * trotter_slices, "L1": 4.0}
    return Schedule(kind=ScheduleKind.COROLLARY1, params=params, scale=scale)


def pimc_spec(
    instance: IsingInstance,
    trotter_slices: int = 2,
    beta: float = 1.0,
    acceptance: AcceptanceKind = AcceptanceKind.HEAT_BATH,
    schedule: Schedule = None,
) -> ChainSpec:
    params = PimcParams(beta=beta, trotter_slices=trotter_slices, acceptance=acceptance)
    schedule = schedule or theorem3_schedule(instance.n_spins, trotter_slices)
    return ChainSpec(kind=ChainKind.PIMC_BOLTZMANN, instance=instance, params=params, schedule=schedule)


def gfmc_params(instance: IsingInstance, gamma0: float = 1.0, variant: GreenVariant = GreenVariant.G1, **kwargs) -> GfmcParams:
    # dt small enough for a non-negative diagonal with E_T = 0
    dt = 0.5 / (instance.energy_bound() + instance.n_spins * gamma0)
    return GfmcParams(dt=dt, e_t=0.0, variant=variant, **kwargs)


def gfmc_schedule(n_spins: int, b: float = 1.0) -> Schedule:
    return Schedule(kind=ScheduleKind.GFMC_POWER, params={"b": b, "c": 1.0 / n_spins, "N": n_spins})
