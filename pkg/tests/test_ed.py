import numpy as np
import pytest

from oracles import dense
from qevmc import rbm, vmc
from qevmc.configspace import all_configs
from qevmc.ed import dense_hamiltonian, ed_correlation, ed_correlation_envelope, ground_state
from qevmc.exceptions import ConfigError
from qevmc.hamiltonian import PauliHamiltonian, xxz

# reference ground energies of the open XXZ chain, n=8, J=1, from the independent kron oracle
XXZ8 = {-2.0: -14.0, -1.0: -7.0}


def test_dense_examples():
    assert np.allclose(dense_hamiltonian(PauliHamiltonian(2, ((2.0, "II"),))), 2 * np.eye(4))
    assert np.allclose(dense_hamiltonian(PauliHamiltonian(1, ((1.0, "Z"),))), np.diag([1, -1]))
    assert np.allclose(np.linalg.eigvalsh(dense_hamiltonian(xxz(2, 1, 1))), [-3, 1, 1, 1])


def test_matches_kron_oracle():
    rng = np.random.default_rng(0)
    from oracles import random_hamiltonian
    for n in (1, 3, 5):
        H = random_hamiltonian(n, 8, rng)
        assert np.max(np.abs(dense_hamiltonian(H) - dense(H))) < 1e-12


def test_ground_state_z():
    sp = ground_state(PauliHamiltonian(1, ((1.0, "Z"),)))
    assert sp.ground_energy == -1
    assert np.allclose(sp.ground_vector, [0, 1])


def test_ground_state_invariants():
    H = xxz(6, 1, 0.5)
    sp = ground_state(H)
    M = dense(H)
    assert np.isclose(np.linalg.norm(sp.ground_vector), 1)
    assert np.max(np.abs(M @ sp.ground_vector - sp.ground_energy * sp.ground_vector)) < 1e-9
    k = np.argmax(np.abs(sp.ground_vector))
    assert sp.ground_vector[k].real > 0 and sp.ground_vector[k].imag == 0


@pytest.mark.parametrize("delta", [-2.0, -1.0, 0.0, 1.0, 2.0])
def test_xxz8_reference(delta):
    e = ground_state(xxz(8, 1, delta)).ground_energy
    assert np.isclose(e, np.linalg.eigvalsh(dense(xxz(8, 1, delta)))[0], atol=1e-10)
    if delta in XXZ8:
        assert np.isclose(e, XXZ8[delta])


def test_term_order_invariance():
    H = xxz(6, 1, 1.3)
    rng = np.random.default_rng(1)
    terms = list(H.terms)
    rng.shuffle(terms)
    assert abs(ground_state(PauliHamiltonian(6, tuple(terms))).ground_energy - ground_state(H).ground_energy) < 1e-12


def test_correlations():
    sp = ground_state(xxz(8, 1, 2.0))
    assert ed_correlation(sp, 3, 3) == pytest.approx(1.0)
    prof = [ed_correlation(sp, 0, j) for j in range(8)]
    assert all(np.sign(prof[j]) == (-1) ** j for j in range(8))
    fm = ground_state(xxz(8, 1, -2.0))
    assert fm.degeneracy == 2
    assert all(ed_correlation(fm, 0, j) == pytest.approx(1.0) for j in range(8))
    assert ed_correlation_envelope(fm, 0, 5) == pytest.approx((1.0, 1.0))
    iso = ground_state(xxz(8, 1, -1.0))
    assert iso.degeneracy == 9
    # the spin-4 multiplet averages <Z_i Z_j> to 1/3; the polarized member reaches 1
    assert ed_correlation(iso, 0, 4) == pytest.approx(1 / 3)
    lo, hi = ed_correlation_envelope(iso, 0, 4)
    assert hi == pytest.approx(1.0) and lo < 1 / 3
    with pytest.raises(ConfigError):
        ed_correlation(sp, 0, 8)


def test_variational_bound():
    H = xxz(4, 1, 0.7)
    e0 = ground_state(H).ground_energy
    for seed in range(10):
        p = rbm.random_init(4, 3, 1.0, 1.0, seed=seed)
        assert vmc.exact_energy(H, p).real >= e0 - 1e-9


def test_size_cap():
    with pytest.raises(ConfigError):
        dense_hamiltonian(PauliHamiltonian(13, ()))
