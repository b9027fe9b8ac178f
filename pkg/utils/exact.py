import logging

import numpy as np
from scipy import sparse
from scipy.linalg import eigvalsh
from scipy.special import logsumexp

from utils.errors import DomainError
from utils.ising import DEFAULT_ENUMERATION_CAP, IsingInstance, energies, enumerate_states
from utils.pimc import replica_states, replica_terms
from utils.schedules import trotter_coupling

logger = logging.getLogger(__name__)

SIGMA_X = sparse.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))


def _check_temperature(beta: float, gamma_field: float) -> None:
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if gamma_field <= 0:
        raise DomainError(f"Gamma must be positive, got {gamma_field}")


def tfim_hamiltonian(instance: IsingInstance, gamma_field: float, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """
    Dense transverse-field Ising Hamiltonian H = H0 - Gamma sum_i sigma^x_i.

    The basis is the canonical state order, so H0 is diagonal with entries
    E0(x) and sigma^x_i flips bit i of the state index.

    Args:
        instance (IsingInstance): Classical part H0.
        gamma_field (float): Transverse field Gamma.
        cap (int): Largest N allowed.

    Returns:
        np.ndarray: 2^N x 2^N real symmetric matrix.
    """
    n = instance.n_spins
    states = enumerate_states(n, cap)
    hamiltonian = sparse.diags(energies(instance, states)).tocsr()
    for i in range(n):
        # bit i is the i-th least significant factor of the tensor product
        flip = sparse.kron(sparse.kron(sparse.identity(2 ** (n - 1 - i)), SIGMA_X), sparse.identity(2 ** i))
        hamiltonian = hamiltonian - gamma_field * flip
    return hamiltonian.toarray()


def log_partition_exact(instance: IsingInstance, beta: float, gamma_field: float) -> float:
    """log Tr exp(-beta H) from the eigenvalues of the dense Hamiltonian."""
    _check_temperature(beta, gamma_field)
    spectrum = eigvalsh(tfim_hamiltonian(instance, gamma_field))
    return float(logsumexp(-beta * spectrum))


def partition_exact(instance: IsingInstance, beta: float, gamma_field: float) -> float:
    return float(np.exp(log_partition_exact(instance, beta, gamma_field)))


def _log_trotter_prefactor(n_spins: int, beta: float, trotter_slices: int, gamma_field: float) -> float:
    # each of the N*M slice bonds contributes sqrt(sinh(2a)/2), a = beta*Gamma/M
    a = beta * gamma_field / trotter_slices
    return 0.5 * n_spins * trotter_slices * (np.log(0.5) + np.log(np.sinh(2.0 * a)))


def log_partition_trotter(
    instance: IsingInstance, beta: float, trotter_slices: int, gamma_field: float, cap: int = DEFAULT_ENUMERATION_CAP
) -> float:
    """
    log of the Suzuki-Trotter partition function by enumerating every replica.

    Z_M = (sinh(2 beta Gamma / M) / 2)^(N M / 2) sum_x exp(-beta F0(x) - gamma F1(x)),
    which converges to Tr exp(-beta H) as M grows.
    """
    _check_temperature(beta, gamma_field)
    configs = replica_states(instance.n_spins, trotter_slices, cap)
    f0, f1 = replica_terms(instance, configs)
    coupling = trotter_coupling(beta, trotter_slices, gamma_field)
    prefactor = _log_trotter_prefactor(instance.n_spins, beta, trotter_slices, gamma_field)
    return float(prefactor + logsumexp(-beta * f0 - coupling * f1))


def transfer_matrix(instance: IsingInstance, beta: float, trotter_slices: int, gamma_field: float) -> np.ndarray:
    """
    Symmetric slice-to-slice transfer matrix
    T[s', s] = exp(-beta (E0(s) + E0(s')) / 2M + gamma s . s').
    """
    _check_temperature(beta, gamma_field)
    states = enumerate_states(instance.n_spins).astype(np.float64)
    half = np.exp(-0.5 * beta * energies(instance, states) / trotter_slices)
    coupling = trotter_coupling(beta, trotter_slices, gamma_field)
    kinetic = np.exp(coupling * (states @ states.T))
    return half[:, None] * kinetic * half[None, :]


def log_partition_transfer(instance: IsingInstance, beta: float, trotter_slices: int, gamma_field: float) -> float:
    """Same quantity as log_partition_trotter, as the prefactor times Tr T^M."""
    # T is positive definite: the kinetic factor is a tensor power of [[e^g, e^-g], [e^-g, e^g]]
    eigenvalues = eigvalsh(transfer_matrix(instance, beta, trotter_slices, gamma_field))
    prefactor = _log_trotter_prefactor(instance.n_spins, beta, trotter_slices, gamma_field)
    return float(prefactor + logsumexp(trotter_slices * np.log(eigenvalues)))


def partition_trotter(instance: IsingInstance, beta: float, trotter_slices: int, gamma_field: float) -> float:
    """Trotter partition function, via enumeration when small and the transfer matrix otherwise."""
    if instance.n_spins * trotter_slices <= 12:
        return float(np.exp(log_partition_trotter(instance, beta, trotter_slices, gamma_field)))
    return float(np.exp(log_partition_transfer(instance, beta, trotter_slices, gamma_field)))
