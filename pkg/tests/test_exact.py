import numpy as np
import pytest
from scipy.linalg import expm

from utils.errors import DomainError
from utils.exact import (
    log_partition_exact,
    log_partition_transfer,
    log_partition_trotter,
    partition_exact,
    partition_trotter,
    tfim_hamiltonian,
    transfer_matrix,
)
from utils.ising import IsingInstance, energies, enumerate_states


@pytest.fixture
def tfim2() -> IsingInstance:
    return IsingInstance(n_spins=2, couplings=[(0, 1, 1.0)], fields=[(0, 0.3)])


def test_hamiltonian_structure(tfim2):
    hamiltonian = tfim_hamiltonian(tfim2, 0.7)
    assert hamiltonian.shape == (4, 4)
    np.testing.assert_allclose(hamiltonian, hamiltonian.T)
    np.testing.assert_allclose(np.diag(hamiltonian), energies(tfim2, enumerate_states(2)))
    # states 0 and 1 differ in bit 0, states 0 and 3 in both bits
    assert hamiltonian[0, 1] == pytest.approx(-0.7)
    assert hamiltonian[0, 2] == pytest.approx(-0.7)
    assert hamiltonian[0, 3] == 0.0


def test_single_spin_partition_function_closed_form():
    instance = IsingInstance(n_spins=1, fields=[(0, 0.4)])
    beta, gamma_field = 1.3, 0.9
    expected = 2.0 * np.cosh(beta * np.hypot(0.4, gamma_field))
    assert partition_exact(instance, beta, gamma_field) == pytest.approx(expected, rel=1e-12)


def test_exact_partition_matches_matrix_exponential(tfim2):
    expected = np.trace(expm(-1.5 * tfim_hamiltonian(tfim2, 0.8)))
    assert partition_exact(tfim2, 1.5, 0.8) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("trotter_slices", [1, 2, 3, 4, 6])
def test_transfer_matrix_agrees_with_enumeration(tfim2, trotter_slices):
    by_enumeration = log_partition_trotter(tfim2, 1.2, trotter_slices, 0.6)
    by_transfer = log_partition_transfer(tfim2, 1.2, trotter_slices, 0.6)
    assert by_transfer == pytest.approx(by_enumeration, rel=1e-12)


def test_transfer_matrix_is_symmetric_and_positive(tfim2):
    matrix = transfer_matrix(tfim2, 1.0, 4, 0.5)
    np.testing.assert_allclose(matrix, matrix.T)
    assert np.all(np.linalg.eigvalsh(matrix) > 0)


def test_trotter_error_decreases_monotonically_in_M(tfim2):
    beta, gamma_field = 1.0, 1.0
    exact = np.trace(expm(-beta * tfim_hamiltonian(tfim2, gamma_field)))
    errors = [abs(partition_trotter(tfim2, beta, m, gamma_field) - exact) for m in (2, 4, 8, 16)]
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] / exact < 1e-2


def test_trotter_partition_converges_on_a_glass(glass4):
    exact = log_partition_exact(glass4, 0.8, 0.5)
    assert log_partition_transfer(glass4, 0.8, 64, 0.5) == pytest.approx(exact, rel=1e-3)


@pytest.mark.parametrize("beta,gamma_field", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
def test_partition_functions_reject_non_positive_parameters(tfim2, beta, gamma_field):
    with pytest.raises(DomainError):
        log_partition_exact(tfim2, beta, gamma_field)
    with pytest.raises(DomainError):
        log_partition_trotter(tfim2, beta, 2, gamma_field)
