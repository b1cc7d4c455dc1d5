import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import dense_energy, random_hamiltonian
from qevmc import ed, rbm, vmc
from qevmc.configspace import all_configs
from qevmc.exceptions import ConfigError, NumericalError
from qevmc.hamiltonian import PauliHamiltonian, xxz
from qevmc.surrogate import SurrogateModel, log_phi_table
from qevmc import mcmc


def _identity(n, c):
    return PauliHamiltonian(n, ((c, "I" * n),))


def _phi_weights(model):
    return mcmc.exact_phi(model)


def _params(n, m, seed, scale=0.4):
    return rbm.random_init(n, m, 1.0, scale, seed=seed)


def test_identity_energy_and_variance():
    p = _params(3, 2, 0)
    model = mcmc.random_ising_model(3, np.random.default_rng(0))
    samples = all_configs(3)[[0, 3, 3, 5]]
    assert vmc.estimate_energy(samples, p, model, _identity(3, 2.5)) == pytest.approx(2.5)
    assert vmc.estimate_variance(samples, p, model, _identity(3, 2.5)) == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(vmc.estimate_gradients(samples, p, model, _identity(3, 2.5)), 0.0, atol=1e-12)


def test_single_sample_energy_is_local_energy():
    from qevmc.hamiltonian import local_energy
    p = _params(3, 2, 1)
    H = xxz(3, 1.0, 0.7)
    model = mcmc.random_ising_model(3, np.random.default_rng(1))
    v = np.array([1, -1, 1], dtype=np.int8)
    mu = vmc.estimate_energy(np.tile(v, (7, 1)), p, model, H)
    assert mu == pytest.approx(local_energy(H, p, v), abs=1e-12)


def test_two_point_variance_example():
    # n=1, H = Z, uniform amplitudes: samples -1 and +1 give E_loc = +1 and -1
    p = rbm.zeros(1, 1)
    model = SurrogateModel(1, 2, 0.0, [0.0], [[0.0]])
    H = PauliHamiltonian(1, ((1.0, "Z"),))
    V = np.array([[-1], [1]], dtype=np.int8)
    assert vmc.estimate_energy(V, p, model, H) == pytest.approx(0.0)
    assert vmc.estimate_variance(V, p, model, H, mu=0.0) == pytest.approx(1.0)


def test_eigenstate_has_zero_variance_and_gradient():
    # f concentrated on v = -1 (|0>, eigenvalue +1 of Z) by a large Re(a)
    p = rbm.RbmParams([12.0], [0.0], [[0.0]])
    model = SurrogateModel(1, 2, 0.0, [0.0], [[0.0]])
    H = PauliHamiltonian(1, ((1.0, "Z"),))
    V = all_configs(1)
    w = np.exp(rbm.log_rho_diag(p, V))
    w /= w.sum()
    assert vmc.estimate_variance(V, p, model, H, sample_weights=w) <= 1e-10
    assert np.allclose(vmc.estimate_gradients(V, p, model, H, sample_weights=w), 0.0, atol=1e-9)


def test_all_weights_underflow():
    p = rbm.zeros(2, 1)
    model = SurrogateModel(2, 2, 0.0, [0.0, 0.0], np.zeros((2, 2)))
    with pytest.raises(NumericalError):
        vmc.estimate_energy(all_configs(2), p, model, xxz(2), sample_weights=np.zeros(4))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_enumeration_over_phi_matches_dense(n, m, seed):
    rng = np.random.default_rng(seed)
    p = _params(n, m, rng, scale=0.5)
    H = random_hamiltonian(n, 5, rng)
    model = mcmc.random_ising_model(n, rng)
    V = all_configs(n)
    mu = vmc.estimate_energy(V, p, model, H, sample_weights=mcmc.exact_phi(model))
    ref = dense_energy(H, p)
    assert abs(mu - ref) <= 1e-10 * max(1.0, abs(ref))
    assert abs(vmc.exact_energy(H, p) - ref) <= 1e-10 * max(1.0, abs(ref))


def test_kappa_weighting_over_phi_equals_rho_mean():
    rng = np.random.default_rng(3)
    p = _params(4, 3, rng)
    H = xxz(4, 1.0, 0.5)
    model = mcmc.random_ising_model(4, rng)
    V = all_configs(4)
    a = vmc.estimate_all(V, p, model, H, sample_weights=mcmc.exact_phi(model))
    rho = np.exp(rbm.log_rho_diag(p, V))
    rho /= rho.sum()
    assert np.allclose(a.weights, rho, atol=1e-14)
    b = vmc.estimate_all(V, p, model, H, sample_weights=mcmc.exact_phi(model))
    assert a.energy == b.energy


def _fd_gradient(H, p, h=1e-6):
    x = p.to_vector()
    g = np.zeros_like(x)
    for k in range(x.size):
        d = np.zeros_like(x)
        d[k] = h
        up = rbm.RbmParams.from_vector(x + d, p.n, p.m, p.beta)
        dn = rbm.RbmParams.from_vector(x - d, p.n, p.m, p.beta)
        g[k] = (vmc.exact_energy(H, up).real - vmc.exact_energy(H, dn).real) / (2 * h)
    return g


@pytest.mark.parametrize("m", [1, 2])
def test_gradient_matches_finite_difference(m):
    for seed in range(5):
        rng = np.random.default_rng(seed)
        p = _params(2, m, rng, scale=0.6)
        H = random_hamiltonian(2, 6, rng)
        g = vmc.exact_gradient(H, p)
        fd = _fd_gradient(H, p)
        assert np.all(np.abs(g - fd) <= 1e-6 * np.maximum(1.0, np.abs(fd)))


def test_sampled_gradient_uses_same_estimator():
    rng = np.random.default_rng(4)
    p = _params(3, 2, rng)
    H = xxz(3, 1.0, -0.5)
    model = mcmc.random_ising_model(3, rng)
    g = vmc.estimate_gradients(all_configs(3), p, model, H, sample_weights=mcmc.exact_phi(model))
    assert np.allclose(g, vmc.exact_gradient(H, p), atol=1e-12)


def test_training_identity_converges_at_epoch_two():
    tr = vmc.train(_identity(3, 1.75), vmc.TrainingConfig(samples_per_epoch=500, seed=1))
    assert tr.epochs == 2 and tr.converged
    assert np.allclose(tr.energies(), 1.75)


def test_training_single_qubit_z():
    H = PauliHamiltonian(1, ((1.0, "Z"),))
    tr = vmc.train(H, vmc.TrainingConfig(samples_per_epoch=2000, seed=2))
    assert tr.energies()[-1] <= -0.999
    assert vmc.exact_energy(H, tr.final_params).real <= -0.99


def test_training_is_deterministic():
    H = xxz(3, 1.0, 1.0)
    cfg = vmc.TrainingConfig(epochs_max=4, samples_per_epoch=300, seed=5)
    a, b = vmc.train(H, cfg), vmc.train(H, cfg)
    assert a.energy == b.energy
    assert np.array_equal(a.final_params.to_vector(), b.final_params.to_vector())


def test_training_trace_consistency():
    H = xxz(4, 1.0, 1.0)
    tr = vmc.train(H, vmc.TrainingConfig(epochs_max=6, samples_per_epoch=500, seed=6, window=3))
    k = tr.epochs
    assert all(len(x) == k for x in (tr.energy, tr.variance, tr.var_ratio, tr.acceptance, tr.grad_norm))
    for e, v, r in zip(tr.energy, tr.variance, tr.var_ratio):
        assert r == pytest.approx(v / abs(e) ** 2)
    assert tr.best_energy == min(tr.energies()[-3:])
    assert len(list(tr.rows())) == k


def test_warm_start_from_file(tmp_path):
    H = xxz(4, 1.0, 1.0)
    first = vmc.train(H, vmc.TrainingConfig(epochs_max=30, samples_per_epoch=1000, seed=7))
    path = tmp_path / "p.json"
    first.final_params.save(path)
    cfg = vmc.TrainingConfig(epochs_max=1, samples_per_epoch=1000, seed=8, warm_start_path=str(path))
    warm = vmc.train(H, cfg)
    cold = vmc.train(H, dataclasses.replace(cfg, warm_start_path=None))
    assert warm.energies()[0] < cold.energies()[0]


def test_training_rejects_size_mismatch():
    with pytest.raises(ConfigError):
        vmc.train(xxz(3), vmc.TrainingConfig(epochs_max=1), initial_params=rbm.zeros(4, 2))


@pytest.mark.parametrize("kw", [dict(epochs_max=0), dict(burn_in_fraction=1.0), dict(learning_rate=0.0),
                                dict(optimizer="lbfgs"), dict(proposal="Q"), dict(phase_init="odd")])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        vmc.TrainingConfig(**kw)


def test_config_dict_round_trip():
    cfg = vmc.TrainingConfig(seed=3, learning_rate=0.01, hidden=5)
    assert vmc.TrainingConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        vmc.TrainingConfig.from_dict({"bogus": 1})


def test_staggered_phase_is_sublattice_sign():
    p = rbm.with_staggered_phase(rbm.zeros(4, 2))
    V = all_configs(4)
    lf = rbm.log_f(p, V)
    up_total = (V > 0).sum(1)
    odd_up = (V[:, 1::2] > 0).sum(1)
    for k in range(5):
        sel = up_total == k
        ph = np.exp(1j * lf.imag[sel])
        ref = (-1.0) ** odd_up[sel]
        assert np.allclose(ph / ph[0], ref / ref[0])
    assert np.allclose(rbm.log_rho_diag(p, V), 0.0)


def test_monotone_trend_small_chain():
    H = xxz(6, 1.0, 1.0)
    tr = vmc.train(H, vmc.TrainingConfig(epochs_max=30, samples_per_epoch=2000, seed=0,
                                         convergence_tol=1e-12))
    e = tr.energies()
    med = [np.median(e[k:k + 10]) for k in (0, 10, 20)]
    assert med[0] >= med[1] >= med[2]


def test_zve_examples():
    x = np.linspace(0.01, 0.2, 12)
    r = vmc.zve((x, -3 + 5 * x))
    assert r.extrapolated_energy == pytest.approx(-3, abs=1e-10) and r.slope == pytest.approx(5)
    assert r.fit_points == 12
    e = np.array([-1.0, -1.2, -0.9])
    z = vmc.zve((np.zeros(3), e))
    assert z.extrapolated_energy == pytest.approx(e.mean())
    d = vmc.zve((np.full(4, 0.3), np.array([-1.0, -2.0, -1.0, -2.0])))
    assert d.degenerate and d.extrapolated_energy == pytest.approx(-1.5)
    with pytest.raises(ConfigError):
        vmc.zve(([0.1, 0.2], [-1.0, -1.1]))


def test_zve_uses_zero_variance_points():
    x = np.array([0.3, 0.1, 0.02, 0.0, 0.0])
    e = np.array([-10.0, -12.0, -13.5, -14.0, -14.0])
    r = vmc.zve((x, e))
    assert r.zero_variance and r.extrapolated_energy == -14.0


def test_zve_window():
    x = np.concatenate([np.full(10, 5.0), np.linspace(0.1, 0.2, 20)])
    e = np.concatenate([np.full(10, 100.0), -2 + 3 * np.linspace(0.1, 0.2, 20)])
    assert vmc.zve((x, e), window=20).extrapolated_energy == pytest.approx(-2, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100.0))
def test_zve_intercept_invariant_under_rescaling(seed, factor):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.01, 0.3, 20)
    e = -5 + 2 * x + rng.normal(0, 0.01, 20)
    a = vmc.zve((x, e)).extrapolated_energy
    b = vmc.zve((factor * x, e)).extrapolated_energy
    assert a == pytest.approx(b, abs=1e-10)


def test_correlation_examples():
    p = _params(4, 3, 9)
    assert vmc.two_point_correlation(p, 2, 2) == 1.0
    z = rbm.zeros(4, 3)
    assert vmc.two_point_correlation(z, 0, 3) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ConfigError):
        vmc.two_point_correlation(p, 0, 4)


def test_correlation_matches_dense_state():
    p = _params(4, 3, 10)
    V = all_configs(4)
    rho = np.exp(rbm.log_rho_diag(p, V))
    rho /= rho.sum()
    z = -V.astype(float)
    assert vmc.two_point_correlation(p, 0, 2) == pytest.approx(float(rho @ (z[:, 0] * z[:, 2])))


def test_sampled_correlation_over_phi_matches_exact():
    p = _params(4, 3, 11)
    model = mcmc.random_ising_model(4, np.random.default_rng(11))
    chain = mcmc.run_chain(mcmc.proposal_spec("A"), model, 40000, 0.1, seed=1)
    got = vmc.two_point_correlation(p, 0, 1, samples=chain.retained, model=model)
    assert got == pytest.approx(vmc.two_point_correlation(p, 0, 1), abs=0.05)


def test_sweep_restart_rule():
    assert vmc._crosses_ferro_boundary(-1.0, -2.0, 1.0)
    assert not vmc._crosses_ferro_boundary(0.0, -1.0, 1.0)
    assert not vmc._crosses_ferro_boundary(2.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        vmc.xxz_sweep(4, (1.0,), restart="sometimes")


def test_small_sweep_records_warm_sources():
    cfg = vmc.TrainingConfig(epochs_max=3, samples_per_epoch=300, seed=0, phase_init="staggered")
    pts = vmc.xxz_sweep(4, (1.0, 0.0, -2.0), 1.0, cfg)
    assert [p.warm_from for p in pts] == [None, 1.0, None]
    assert all(p.trace.epochs == 3 for p in pts)


@pytest.mark.slow
def test_trained_af_correlations_match_ed(xxz_sweep):
    point = xxz_sweep[2.0]
    spec = ed.ground_state(xxz(8, 1.0, 2.0))
    for j in range(1, 8):
        c = vmc.two_point_correlation(point.trace.final_params, 0, j)
        ref = ed.ed_correlation(spec, 0, j)
        assert abs(c - ref) <= 0.1
        assert np.sign(c) == (-1) ** j
