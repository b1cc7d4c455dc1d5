"""Independent dense-matrix oracles used across the test suite."""
import functools

import numpy as np

from qevmc import rbm
from qevmc.configspace import all_configs

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def word_matrix(word):
    # site 0 is the least significant bit, so it is the last kron factor
    return functools.reduce(np.kron, [PAULI[c] for c in reversed(word)])


def dense(H):
    dim = 1 << H.n
    M = np.zeros((dim, dim), dtype=complex)
    for c, w in H.terms:
        M += c * word_matrix(w)
    return M


def rho_matrix(params):
    """R[v', v] = rho(v, v') so that sum_v rho_vv E_loc(v) = Tr(R H)."""
    V = all_configs(params.n)
    lf = rbm.log_f(params, V)
    return np.exp(lf[None, :] + np.conj(lf[:, None]))


def dense_energy(H, params):
    R = rho_matrix(params)
    return np.trace(R @ dense(H)) / np.trace(R)


def random_hamiltonian(n, num_terms, rng):
    words = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(num_terms)]
    from qevmc.hamiltonian import PauliHamiltonian
    return PauliHamiltonian(n, tuple(zip(rng.normal(size=num_terms), words)))
