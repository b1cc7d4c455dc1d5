"""Exact diagonalization oracle for small Pauli Hamiltonians."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .configspace import all_configs, configs_to_indices
from .exceptions import ConfigError, NumericalError
from .hamiltonian import PauliHamiltonian

MAX_N = 12
DEGENERACY_TOL = 1e-8


def dense_hamiltonian(H: PauliHamiltonian) -> np.ndarray:
    """Matrix with entries <v|H|v'>, rows and columns in config-index order."""
    if H.n > MAX_N:
        raise ConfigError(f"dense assembly limited to n <= {MAX_N}")
    dim = 1 << H.n
    M = np.zeros((dim, dim), dtype=complex)
    if len(H) == 0:
        return M
    V = all_configs(H.n)
    VP, mel = H.connected(V)
    rows = np.repeat(np.arange(dim), len(H))
    cols = configs_to_indices(VP.reshape(-1, H.n))
    np.add.at(M, (rows, cols), mel.reshape(-1))
    if np.max(np.abs(M - M.conj().T)) > 1e-12:
        raise NumericalError("assembled Hamiltonian is not Hermitian")
    return M


@dataclass(frozen=True)
class DenseSpectrum:
    ground_energy: float
    ground_vector: np.ndarray
    eigenvalues: np.ndarray
    ground_space: np.ndarray  # orthonormal columns spanning the lowest level

    @property
    def n(self) -> int:
        return int(np.log2(self.ground_vector.size))

    @property
    def degeneracy(self) -> int:
        return self.ground_space.shape[1]


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    return vec * (np.abs(vec[k]) / vec[k])


def ground_state(H: PauliHamiltonian, tol: float = DEGENERACY_TOL) -> DenseSpectrum:
    M = dense_hamiltonian(H)
    evals, evecs = np.linalg.eigh(M)
    e0 = float(evals[0])
    deg = int(np.sum(evals - e0 <= tol * max(1.0, abs(e0))))
    gv = _fix_phase(evecs[:, 0])
    space = evecs[:, :deg]
    return DenseSpectrum(e0, gv, evals, space)


def _zz_diag(n: int, i: int, j: int) -> np.ndarray:
    if not (0 <= i < n and 0 <= j < n):
        raise ConfigError(f"site indices ({i}, {j}) out of range for n={n}")
    V = all_configs(n).astype(float)
    # z = -v on every site, so the product is v_i v_j
    return V[:, i] * V[:, j]


def ed_correlation(spectrum: DenseSpectrum, i: int, j: int, mode: str = "projector") -> float:
    """<Z_i Z_j> in the ground level.

    mode="vector" uses the phase-fixed ground vector; mode="projector" (default)
    averages over the degenerate ground space, Tr(P Z_i Z_j) / Tr(P), which is
    basis independent and reduces to the vector value for a unique ground state.
    """
    d = _zz_diag(spectrum.n, i, j)
    if mode == "vector":
        return float(np.real(np.vdot(spectrum.ground_vector, d * spectrum.ground_vector)))
    if mode == "projector":
        G = spectrum.ground_space
        return float(np.real(np.sum(np.abs(G) ** 2 * d[:, None])) / G.shape[1])
    raise ConfigError(f"unknown correlation mode {mode!r}")


def ed_correlation_envelope(spectrum: DenseSpectrum, i: int, j: int) -> tuple:
    """(min, max) of <Z_i Z_j> over normalized states in the ground space."""
    d = _zz_diag(spectrum.n, i, j)
    G = spectrum.ground_space
    ev = np.linalg.eigvalsh(G.conj().T @ (d[:, None] * G))
    return float(ev[0]), float(ev[-1])
