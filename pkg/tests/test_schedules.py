import logging

import mpmath
import numpy as np
import pytest

from utils.errors import DomainError, InvalidArgumentError
from utils.schedules import (
    SCHEDULE_FLOOR,
    Control,
    Direction,
    Schedule,
    ScheduleKind,
    corollary1_gamma,
    first_defined_step,
    geman_geman_T,
    gfmc_certified,
    gfmc_g2_gamma,
    gfmc_gamma,
    inverse_trotter_coupling,
    power_gamma,
    theorem3_T1,
    time_to_threshold,
    trotter_coupling,
    tsallis_certified,
    tsallis_gamma,
    tsallis_T1,
)


def _coupling_oracle(beta, M, gamma_field):
    # coth(a) - 1 is about 2 exp(-2a), far below double precision for large a
    with mpmath.workdps(400):
        a = mpmath.mpf(beta) * mpmath.mpf(gamma_field) / M
        return float(mpmath.log(mpmath.coth(a)) / 2)


@pytest.mark.parametrize("gamma_field", [1e-8, 1e-3, 0.3, 1.0, 7.5, 40.0, 300.0])
def test_trotter_coupling_matches_high_precision(gamma_field):
    assert trotter_coupling(2.0, 4, gamma_field) == pytest.approx(_coupling_oracle(2.0, 4, gamma_field), rel=1e-12)


def test_trotter_coupling_decreases_in_field():
    fields = np.logspace(-6, 2, 200)
    couplings = trotter_coupling(1.0, 8, fields)
    assert np.all(np.diff(couplings) < 0)
    assert np.all(couplings > 0)


@pytest.mark.parametrize("gamma_field", [0.0, -1.0])
def test_trotter_coupling_rejects_non_positive_field(gamma_field):
    with pytest.raises(DomainError):
        trotter_coupling(1.0, 4, gamma_field)


def test_inverse_trotter_coupling_recovers_field():
    assert inverse_trotter_coupling(1.5, 4, trotter_coupling(1.5, 4, 0.8)) == pytest.approx(0.8, rel=1e-12)


@pytest.mark.parametrize("t", [0, 1, 10, 1000, 10 ** 6])
def test_corollary1_gamma_matches_closed_form(t):
    M, beta, R, L1 = 4, 2.0, 8, 4.0
    expected = mpmath.mpf(M) / beta * mpmath.atanh(mpmath.power(t + 2, mpmath.mpf(-2) / (R * L1)))
    assert corollary1_gamma(t, M, beta, R, L1) == pytest.approx(float(expected), rel=1e-10)


def test_corollary1_coupling_is_the_theorem3_boundary():
    t = np.arange(0, 500)
    couplings = trotter_coupling(1.0, 4, corollary1_gamma(t, 4, 1.0, 8, 4.0))
    np.testing.assert_allclose(1.0 / couplings, theorem3_T1(t, 8, 4.0), rtol=1e-10)


def test_gfmc_gamma_power_law():
    assert gfmc_gamma(0, b=2.0, c=0.5, N=2) == pytest.approx(2.0)
    assert gfmc_gamma(99, b=2.0, c=0.5, N=2) == pytest.approx(0.2)


def test_gfmc_g2_gamma_is_undefined_before_first_step():
    assert first_defined_step(1.0, 4) == 16
    with pytest.raises(DomainError, match="before t = 16"):
        gfmc_g2_gamma(15, b=1.0, dt=0.1, N=4)
    value = gfmc_g2_gamma(16, b=1.0, dt=0.1, N=4)
    x = mpmath.mpf(2) * mpmath.power(17, mpmath.mpf(-1) / 4)
    assert value == pytest.approx(float(-mpmath.log(1 - x) / (2 * mpmath.mpf("0.1"))), rel=1e-10)


def test_certified_ranges():
    assert tsallis_certified(0.25, 2.0, 4)
    assert not tsallis_certified(0.3, 2.0, 4)
    assert gfmc_certified(0.25, 4)
    assert not gfmc_certified(0.5, 4)


def test_time_to_threshold_pimc_t1():
    expected = mpmath.exp(mpmath.mpf(8 * 4) / 2 * mpmath.log(mpmath.mpf(4) / (1 * mpmath.mpf("0.1"))))
    assert time_to_threshold(0.1, "pimc_t1", R=8, L1=4.0, M=4, beta=1.0) == pytest.approx(float(expected), rel=1e-10)


def test_time_to_threshold_tsallis_t2():
    assert time_to_threshold(0.01, "tsallis_t2", N=3) == pytest.approx(np.log(100.0) ** 3)


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.5, 2.0])
def test_time_to_threshold_rejects_delta_outside_unit_interval(delta):
    with pytest.raises(DomainError):
        time_to_threshold(delta, "tsallis_t2", N=3)


def test_time_to_threshold_rejects_unknown_variant():
    with pytest.raises(InvalidArgumentError):
        time_to_threshold(0.1, "sa_t3", N=3)


def test_schedule_scale_and_offset():
    base = Schedule(kind=ScheduleKind.GFMC_POWER, params={"b": 1.0, "c": 1.0, "N": 1})
    shifted = Schedule(kind=ScheduleKind.GFMC_POWER, params={"b": 1.0, "c": 1.0, "N": 1}, scale=0.5, offset=3)
    assert shifted.value(0) == pytest.approx(0.5 * base.value(3))
    assert shifted.label == "gfmc_powerx0.5"


def test_schedule_metadata():
    schedule = Schedule(kind=ScheduleKind.THEOREM3_T1, params={"R": 2, "L1": 4.0})
    assert schedule.control_kind is Control.T1
    assert schedule.direction is Direction.DECREASING
    constant = Schedule(kind=ScheduleKind.CONSTANT, params={"value": 1.0}, control=Control.T)
    assert constant.control_kind is Control.T
    assert constant.direction is Direction.CONSTANT
    assert not constant.certified


def test_schedule_scaled_below_boundary_is_not_certified():
    params = {"M": 4, "beta": 1.0, "R": 8, "L1": 4.0}
    assert Schedule(kind=ScheduleKind.COROLLARY1, params=params).certified
    assert not Schedule(kind=ScheduleKind.COROLLARY1, params=params, scale=0.01).certified


def test_schedule_missing_params_are_rejected():
    with pytest.raises(ValueError, match="missing params"):
        Schedule(kind=ScheduleKind.COROLLARY1, params={"M": 4})


def test_schedule_control_cannot_be_overridden():
    with pytest.raises(ValueError):
        Schedule(kind=ScheduleKind.THEOREM3_T1, params={"R": 2, "L1": 4.0}, control=Control.GAMMA)


def test_schedule_underflow_is_clamped_and_logged(caplog):
    schedule = Schedule(kind=ScheduleKind.EXPONENTIAL_T1, params={"b": 1.0, "rate": 1.0})
    with caplog.at_level(logging.WARNING, logger="utils.schedules"):
        result = schedule.evaluate(np.array([0, 10, 1000, 2000]))
    assert result.n_clamped == 2
    assert np.all(result.values[2:] == SCHEDULE_FLOOR)
    assert "clamped 2 value(s)" in caplog.text


def test_schedule_rejects_negative_time():
    schedule = Schedule(kind=ScheduleKind.THEOREM3_T1, params={"R": 2, "L1": 4.0})
    with pytest.raises(InvalidArgumentError):
        schedule.evaluate(-1)


def test_log_inverse_temperature_is_finite_at_start():
    schedule = Schedule(kind=ScheduleKind.LOG_INVERSE_T, params={"N": 6})
    assert schedule.value(0) == pytest.approx(6 / np.log(2.0))
    assert schedule.control_kind is Control.T


def test_geman_geman_temperature():
    assert geman_geman_T(np.e - 1.0, 3) == pytest.approx(3.0)
    np.testing.assert_allclose(geman_geman_T(np.array([1.0, 3.0]), 2), 2.0 / np.log([2.0, 4.0]))
    with pytest.raises(DomainError):
        geman_geman_T(0, 3)


def test_power_form_is_the_large_t_limit_of_corollary1():
    t = np.array([0.0, 10.0, 1e4])
    assert np.all(power_gamma(t, 2, 1.0, 1, 4.0) <= corollary1_gamma(t, 2, 1.0, 1, 4.0))
    assert power_gamma(1e12, 2, 1.0, 1, 4.0) == pytest.approx(corollary1_gamma(1e12, 2, 1.0, 1, 4.0), rel=1e-9)


def test_tsallis_field_matches_the_kinetic_temperature_through_the_trotter_map():
    for t in (10.0, 100.0):
        through_map = inverse_trotter_coupling(1.0, 4, 1.0 / tsallis_T1(t, b=1.0, c=0.5))
        assert tsallis_gamma(t, 1.0, 0.5, 4, 1.0) == pytest.approx(through_map, rel=1e-9)
