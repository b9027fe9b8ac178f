import numpy as np
import pandas as pd
import pytest

from tests.conftest import gfmc_params, gfmc_schedule
from utils.errors import ConfigurationError, InvalidArgumentError
from utils.gfmc import (
    TRACE_COLUMNS,
    GfmcParams,
    GreenVariant,
    PopulationControl,
    WalkerPopulation,
    check_diagonal,
    default_dt,
    g1_hat,
    g1_hat_matrix,
    g1_matrix,
    g1_transition,
    g2_matrix,
    g2_transition,
    iterate_exact,
    resolve_reference_energy,
    run_gfmc,
    stationary_q1,
    stationary_q1_closed_form,
    step_population,
    weight_w,
    weights_all,
)
from utils.ising import IsingInstance, energies, enumerate_states, random_instance
from utils.schedules import Schedule, ScheduleKind


@pytest.fixture
def biased2() -> IsingInstance:
    return IsingInstance(n_spins=2, couplings=[(0, 1, 1.0)], fields=[(0, 0.5)])


def test_weight_is_larger_for_lower_energy(ferro2):
    params = gfmc_params(ferro2)
    aligned = weight_w([1, 1], 0, ferro2, params, 1.0)
    assert aligned == pytest.approx(1.0 + params.dt + 2 * params.dt)
    assert aligned > weight_w([1, -1], 0, ferro2, params, 1.0)


def test_g1_hat_elements(triangle):
    params = gfmc_params(triangle)
    assert g1_hat([1, 1, 1], [1, 1, 1], 0, triangle, params, 0.5) == pytest.approx(1.0 + 3.0 * params.dt)
    assert g1_hat([-1, 1, 1], [1, 1, 1], 0, triangle, params, 0.5) == pytest.approx(0.5 * params.dt)
    assert g1_hat([-1, -1, 1], [1, 1, 1], 0, triangle, params, 0.5) == 0.0


def test_g1_row_is_normalised(glass4):
    params = gfmc_params(glass4)
    schedule = gfmc_schedule(4)
    for x in enumerate_states(4):
        row = g1_transition(x, 3, glass4, params, schedule)
        assert row.probabilities.sum() == pytest.approx(1.0, abs=1e-15)
        w = weight_w(x, 3, glass4, params, schedule)
        assert row.probabilities[0] == pytest.approx(1.0 - 4 * params.dt * schedule.value(3) / w)
        np.testing.assert_array_equal(row.states[0], x)


def test_g1_decomposes_into_probability_and_weight(glass4):
    params = gfmc_params(glass4)
    hat = g1_hat_matrix(glass4, params, 0.7)
    rebuilt = g1_matrix(glass4, params, 0.7) * weights_all(glass4, params, 0.7)[None, :]
    np.testing.assert_allclose(rebuilt, hat, atol=1e-15)


def test_g1_rejects_negative_diagonal(ferro2):
    params = GfmcParams(dt=2.0, e_t=0.0)
    with pytest.raises(ConfigurationError, match=r"\[-1, 1\]"):
        check_diagonal(ferro2, params)
    with pytest.raises(ConfigurationError):
        g1_hat([1, -1], [1, -1], 0, ferro2, params, 1.0)


@pytest.mark.parametrize("n_spins", [2, 4, 6])
def test_stationary_closed_form_is_the_fixed_point(n_spins):
    instance = random_instance(n_spins, "gaussian", seed=n_spins)
    params = gfmc_params(instance)
    schedule = gfmc_schedule(n_spins)
    for t in (0, 10, 10 ** 4):
        q = stationary_q1(t, instance, params, schedule)
        np.testing.assert_allclose(q, stationary_q1_closed_form(t, instance, params, schedule), atol=1e-12)
        residual = g1_matrix(instance, params, schedule.value(t)) @ q - q
        assert np.abs(residual).sum() <= 1e-12


def test_stationary_weight_grows_on_negative_energy_states(glass4):
    params = gfmc_params(glass4)
    schedule = gfmc_schedule(4)
    e0 = energies(glass4, enumerate_states(4))
    for t in (0, 5, 500):
        step = stationary_q1_closed_form(t + 1, glass4, params, schedule) - stationary_q1_closed_form(t, glass4, params, schedule)
        assert np.all(step[e0 < 0] >= 0)
        assert np.all(step[e0 >= 0] <= 0)


@pytest.mark.parametrize("n_spins", [1, 3, 5])
def test_g2_uniform_distribution_is_stationary(n_spins):
    params = GfmcParams(dt=0.2, variant=GreenVariant.G2)
    matrix = g2_matrix(n_spins, params, 0.8)
    np.testing.assert_allclose(matrix.sum(axis=0), 1.0, atol=1e-12)
    uniform = np.full(2 ** n_spins, 2.0 ** -n_spins)
    np.testing.assert_allclose(matrix @ uniform, uniform, atol=1e-12)


def test_g2_matrix_matches_closed_form_elements():
    params = GfmcParams(dt=0.3, variant=GreenVariant.G2)
    states = enumerate_states(3)
    matrix = g2_matrix(3, params, 1.1)
    a = 0.3 * 1.1
    for y in (0, 3, 7):
        for x in (0, 5):
            d = int(np.count_nonzero(states[y] != states[x]))
            expected = (np.cosh(a) / np.exp(a)) ** 3 * np.tanh(a) ** d
            assert matrix[y, x] == pytest.approx(expected, rel=1e-12)
            assert g2_transition(states[x], states[y], 0, params, 1.1) == pytest.approx(expected, rel=1e-12)


def test_reference_energy_resolution(glass4, biased2):
    assert resolve_reference_energy(glass4, 0.25) == 0.25
    assert resolve_reference_energy(glass4, "auto") == 0.0
    assert resolve_reference_energy(biased2, "auto") == 0.0
    assert resolve_reference_energy(glass4, "e_min") == pytest.approx(energies(glass4, enumerate_states(4)).min())
    with pytest.raises(ConfigurationError):
        resolve_reference_energy(glass4, "median")


def test_default_dt_keeps_the_diagonal_non_negative(glass4):
    dt = default_dt(glass4, 0.0, 1.0)
    assert dt == pytest.approx(0.5 / (glass4.energy_bound() + 4.0))
    check_diagonal(glass4, GfmcParams(dt=dt))


def test_field_source_validation(ferro2):
    params = gfmc_params(ferro2)
    with pytest.raises(InvalidArgumentError):
        weight_w([1, 1], 0, ferro2, params, -1.0)
    temperature = Schedule(kind=ScheduleKind.THEOREM3_T1, params={"R": 2, "L1": 4.0})
    with pytest.raises(ConfigurationError):
        weight_w([1, 1], 0, ferro2, params, temperature)


def test_iterate_exact_rejects_bad_start(ferro2):
    params = gfmc_params(ferro2)
    with pytest.raises(InvalidArgumentError):
        iterate_exact(ferro2, np.ones(3), 1.0, params, 5)
    with pytest.raises(InvalidArgumentError):
        iterate_exact(ferro2, np.array([1.0, -1.0, 0.0, 0.0]), 1.0, params, 5)


def test_iterate_exact_concentrates_on_the_ground_states(biased2):
    params = gfmc_params(biased2)
    psi = iterate_exact(biased2, np.full(4, 0.25), gfmc_schedule(2), params, 2000, normalize=True)
    assert psi.sum() == pytest.approx(1.0)
    # E0(+1,+1) = -1.5 is the unique minimum
    assert int(np.argmax(psi)) == 0


def test_iterate_exact_without_field_is_a_diagonal_power(ferro2):
    params = gfmc_params(ferro2)
    psi = iterate_exact(ferro2, np.ones(4), 0.0, params, 3)
    diagonal = 1.0 - params.dt * energies(ferro2, enumerate_states(2))
    np.testing.assert_allclose(psi, diagonal ** 3)


def test_population_bookkeeping():
    pop = WalkerPopulation(np.array([[1, 1], [1, 1], [-1, 1]]), np.array([1.0, 1.0, 3.0]))
    assert pop.size == 3
    assert pop.effective_population() == pytest.approx(25.0 / 11.0)
    np.testing.assert_array_equal(pop.answer(), [-1, 1])
    np.testing.assert_allclose(pop.histogram(), [0.4, 0.6, 0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        WalkerPopulation(np.array([[1, 1]]), np.array([0.0]))


def test_weights_are_renormalised_on_log_scale(ferro2, rng):
    params = gfmc_params(ferro2)
    pop = WalkerPopulation(np.ones((4, 2)), np.full(4, 1e-101))
    new = step_population(pop, 0, ferro2, params, 1.0, rng)
    assert new.weights.max() == 1.0
    assert new.weights.mean() == pytest.approx(1.0)
    assert new.log_scale == pytest.approx(np.log(1e-101 * (1.0 + 3.0 * params.dt)))
    assert new.step == 1


@pytest.fixture
def single_site() -> IsingInstance:
    # E0(+1) = -1, E0(-1) = 1
    return IsingInstance(n_spins=1, fields=[(0, 1.0)])


def test_zero_diagonal_without_field_is_absorbing(single_site):
    params = GfmcParams(dt=1.0, e_t=0.0)
    check_diagonal(single_site, params)
    assert weight_w([-1], 0, single_site, params, 0.0) == 0.0
    row = g1_transition([-1], 0, single_site, params, 0.0)
    np.testing.assert_array_equal(row.probabilities, [1.0, 0.0])
    np.testing.assert_array_equal(g1_matrix(single_site, params, 0.0), np.eye(2))


def test_walkers_at_a_zero_weight_state_are_dropped(single_site, rng):
    params = GfmcParams(dt=1.0, e_t=0.0)
    pop = WalkerPopulation(np.array([[1], [-1], [-1]]), np.ones(3))
    new = step_population(pop, 0, single_site, params, 0.0, rng)
    np.testing.assert_array_equal(new.configs, [[1]])
    assert new.log_scale == pytest.approx(np.log(2.0))
    with pytest.raises(ConfigurationError, match="zero weight"):
        step_population(WalkerPopulation(np.array([[-1]]), np.ones(1)), 0, single_site, params, 0.0, rng)


def test_run_gfmc_with_an_absorbing_state(single_site):
    params = GfmcParams(dt=1.0, e_t=0.0, n_walkers=64)
    trace = run_gfmc(single_site, params, 0.0, horizon=5, seed=0)
    assert np.isfinite(trace.frame.to_numpy(dtype=float)).all()
    np.testing.assert_array_equal(trace.answer, [1])


@pytest.mark.parametrize(
    "instance,dt,n_walkers,horizon",
    [
        (IsingInstance(n_spins=2, couplings=[(0, 1, 400.0)]), 1.0, 64, 5),
        (random_instance(12, "gaussian", seed=3), 2.0, 200, 40),
    ],
)
def test_g2_walkers_with_a_wide_energy_spread(instance, dt, n_walkers, horizon):
    params = GfmcParams(dt=dt, n_walkers=n_walkers, variant=GreenVariant.G2)
    schedule = Schedule(kind=ScheduleKind.GFMC_G2, params={"b": 0.25, "dt": dt, "N": instance.n_spins})
    trace = run_gfmc(instance, params, schedule, horizon=horizon, seed=0, checkpoint_every=1)
    assert len(trace.frame) == horizon
    assert np.isfinite(trace.frame.to_numpy(dtype=float)).all()
    assert trace.population.weights.max() == 1.0
    assert np.isfinite(trace.population.log_scale)


def test_entropy_ignores_vanishing_relative_weights():
    lopsided = WalkerPopulation(np.array([[1], [-1]]), np.array([1e300, 1e-30]))
    assert lopsided.entropy() == pytest.approx(0.0, abs=1e-12)
    even = WalkerPopulation(np.array([[1], [-1], [1]]), np.array([1.0, 2.0, 1.0]))
    assert even.entropy() == pytest.approx(np.log(2.0))


def test_split_kill_keeps_a_population(glass4):
    control = PopulationControl(kind="split_kill")
    params = gfmc_params(glass4, n_walkers=200, population_control=control)
    trace = run_gfmc(glass4, params, gfmc_schedule(4), horizon=100, seed=4)
    assert trace.population.size >= 1
    assert np.all(trace.population.weights > 0)


def test_run_gfmc_trace_and_answer(ferro2):
    params = gfmc_params(ferro2, n_walkers=500)
    trace = run_gfmc(ferro2, params, gfmc_schedule(2), horizon=400, seed=2, checkpoint_every=40, e_target=-1.0)
    assert list(trace.frame.columns) == TRACE_COLUMNS
    assert trace.frame["step"].tolist() == list(range(40, 401, 40))
    assert trace.best_energy == -1.0
    assert trace.first_hit_step == 0
    assert abs(int(trace.answer.sum())) == 2


def test_run_gfmc_is_deterministic(glass4):
    params = gfmc_params(glass4, n_walkers=300, variant=GreenVariant.G2)
    schedule = Schedule(kind=ScheduleKind.GFMC_G2, params={"b": 0.25, "dt": params.dt, "N": 4})
    first = run_gfmc(glass4, params, schedule, horizon=60, seed=8)
    second = run_gfmc(glass4, params, schedule, horizon=60, seed=8)
    pd.testing.assert_frame_equal(first.frame, second.frame)
    np.testing.assert_array_equal(first.answer, second.answer)


def test_run_gfmc_rejects_empty_horizon(ferro2):
    with pytest.raises(InvalidArgumentError):
        run_gfmc(ferro2, gfmc_params(ferro2), gfmc_schedule(2), horizon=0, seed=0)


@pytest.mark.slow
def test_walker_histogram_matches_exact_propagation(biased2):
    params = gfmc_params(biased2, n_walkers=10 ** 5, population_control=PopulationControl(kind="split_kill"))
    schedule = gfmc_schedule(2)
    trace = run_gfmc(biased2, params, schedule, horizon=50, seed=21, checkpoint_every=50)
    exact = iterate_exact(biased2, np.full(4, 0.25), schedule, params, 50, normalize=True)
    sigma = np.sqrt(exact * (1.0 - exact) / trace.population.effective_population())
    np.testing.assert_array_less(np.abs(trace.population.histogram() - exact), 3.0 * sigma)
