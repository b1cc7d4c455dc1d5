"""Variational Monte Carlo training of the RBM with surrogate-assisted sampling.

Each epoch fits the surrogate to the current RBM diagonal, samples it with
Metropolis-Hastings, reweights the samples by kappa = rho / phi and takes an
optimizer step along the estimated energy gradient.
"""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import mcmc
from . import rbm as _rbm
from .configspace import all_configs, configs_to_indices, indices_to_configs
from .exceptions import ConfigError, NumericalError
from .hamiltonian import PauliHamiltonian, local_energies
from .surrogate import SurrogateModel, fit, log_kappa, select_fit_configs

log = logging.getLogger(__name__)

# Var/E^2 at or below this counts as an eigenstate
ZERO_VARIANCE = 1e-12


# ---------------------------------------------------------------------------
# estimators


def _unique(samples):
    samples = np.atleast_2d(np.asarray(samples))
    if samples.shape[0] == 0:
        raise ConfigError("no samples to estimate from")
    idx, inv, counts = np.unique(configs_to_indices(samples), return_inverse=True, return_counts=True)
    return indices_to_configs(idx, samples.shape[1]), inv, counts.astype(float)


def _weights(V, counts, params, model, sample_weights=None, inverse=None):
    lk = np.asarray(log_kappa(params, model, V), dtype=float)
    if sample_weights is not None:
        sw = np.bincount(inverse, weights=np.asarray(sample_weights, dtype=float),
                         minlength=V.shape[0])
        with np.errstate(divide="ignore"):
            lk = lk + np.log(sw)
    else:
        lk = lk + np.log(counts)
    top = np.max(lk)
    if not np.isfinite(top):
        raise NumericalError("all sample weights underflow")
    w = np.exp(lk - top)
    total = w.sum()
    if not np.isfinite(total) or total <= 0:
        raise NumericalError("all sample weights underflow")
    return w / total


@dataclass(frozen=True)
class EpochStats:
    energy: complex
    variance: float
    gradient: np.ndarray
    e_loc: np.ndarray
    weights: np.ndarray


def estimate_all(samples, params, model, H, sample_weights=None, with_gradient: bool = True) -> EpochStats:
    """Energy, variance and gradient from one set of samples.

    Duplicate samples are collapsed first, which leaves every kappa-weighted
    mean unchanged. ``sample_weights`` multiplies the per-sample weight, which
    allows exact enumeration weighted by phi.
    """
    V, inv, counts = _unique(samples)
    w = _weights(V, counts, params, model, sample_weights, inv)
    E = local_energies(H, params, V)
    mu = complex(np.sum(w * E))
    var = float(np.sum(w * np.abs(E - mu) ** 2))
    grad = None
    if with_gradient:
        grad = _gradient(V, w, E, mu, params, H)
    if not (np.isfinite(mu) and np.isfinite(var)) or (grad is not None and not np.all(np.isfinite(grad))):
        raise NumericalError("non-finite energy or gradient estimate")
    return EpochStats(mu, var, grad, E, w)


def _gradient(V, w, E, mu, params, H):
    n, m = params.n, params.m
    ov = _rbm.holomorphic_grad(params, V)
    d = np.zeros(params.num_real)
    if len(H) == 0:
        return d
    VP, mel = H.connected(V)
    lf = _rbm.log_f(params, V)
    lfp = _rbm.log_f(params, VP)
    c = mel * np.exp(np.conj(lfp - lf[:, None]))
    q = np.einsum("ks,ksd->kd", c, np.conj(_rbm.holomorphic_grad(params, VP)))
    eo = E[:, None] * ov
    K = _rbm._assemble(params, eo, q)
    D = _rbm._assemble(params, ov, np.conj(ov))
    g = w @ K - (w @ D) * mu
    return np.real(g)


def estimate_energy(samples, params, model, H, sample_weights=None) -> complex:
    return estimate_all(samples, params, model, H, sample_weights, with_gradient=False).energy


def estimate_variance(samples, params, model, H, mu=None, sample_weights=None) -> float:
    st = estimate_all(samples, params, model, H, sample_weights, with_gradient=False)
    if mu is None:
        return st.variance
    return float(np.sum(st.weights * np.abs(st.e_loc - mu) ** 2))


def estimate_gradients(samples, params, model, H, sample_weights=None) -> np.ndarray:
    return estimate_all(samples, params, model, H, sample_weights).gradient


def exact_energy(H: PauliHamiltonian, params: _rbm.RbmParams) -> complex:
    """Full-enumeration energy sum rho E_loc / sum rho."""
    V = all_configs(params.n)
    ld = _rbm.log_rho_diag(params, V)
    p = np.exp(ld - ld.max())
    return complex(np.sum(p * local_energies(H, params, V)) / p.sum())


def exact_gradient(H: PauliHamiltonian, params: _rbm.RbmParams) -> np.ndarray:
    V = all_configs(params.n)
    ld = _rbm.log_rho_diag(params, V)
    p = np.exp(ld - ld.max())
    p /= p.sum()
    E = local_energies(H, params, V)
    return _gradient(V, p, E, complex(np.sum(p * E)), params, H)


def two_point_correlation(params: _rbm.RbmParams, i: int, j: int, samples=None,
                          model: SurrogateModel | None = None) -> float:
    """<Z_i Z_j> of the RBM diagonal; exact enumeration unless samples are given."""
    n = params.n
    if not (0 <= i < n and 0 <= j < n):
        raise ConfigError(f"site indices ({i}, {j}) out of range for n={n}")
    if i == j:
        return 1.0
    if samples is None:
        if n > 12:
            raise ConfigError("exact correlation limited to n <= 12; pass samples and a model")
        V = all_configs(n)
        ld = _rbm.log_rho_diag(params, V)
        w = np.exp(ld - ld.max())
        w /= w.sum()
    else:
        if model is None:
            raise ConfigError("sampled correlation needs the surrogate model")
        V, inv, counts = _unique(samples)
        w = _weights(V, counts, params, model)
    # z = -v on both sites, so the signs cancel
    return float(np.sum(w * V[:, i] * V[:, j]))


# ---------------------------------------------------------------------------
# optimizers


class Adam:
    def __init__(self, lr=0.02, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, x, g):
        if self.m is None:
            self.m = np.zeros_like(x)
            self.v = np.zeros_like(x)
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * g
        self.v = self.b2 * self.v + (1 - self.b2) * g * g
        mh = self.m / (1 - self.b1 ** self.t)
        vh = self.v / (1 - self.b2 ** self.t)
        return x - self.lr * mh / (np.sqrt(vh) + self.eps)


class SGD:
    def __init__(self, lr=0.02):
        self.lr = lr

    def step(self, x, g):
        return x - self.lr * g


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainingConfig:
    epochs_max: int = 150
    samples_per_epoch: int = 10000
    burn_in_fraction: float = 0.10
    proposal: str = "H"
    learning_rate: float = 0.02
    optimizer: str = "adam"
    fit_total: int | None = None
    fit_top_fraction: float = 0.25
    convergence_tol: float = 1e-4
    convergence_count: int = 5
    window: int = 20
    seed: int = 0
    warm_start_path: str | None = None
    hidden: int | None = None
    beta: float = 1.0
    init_scale: float = 0.05
    phase_init: str = "none"

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("epochs_max", "samples_per_epoch", "window", "convergence_count"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.burn_in_fraction < 1:
            raise ConfigError("burn_in_fraction must lie in [0, 1)")
        if not self.learning_rate > 0 or not self.convergence_tol > 0:
            raise ConfigError("learning_rate and convergence_tol must be positive")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        mcmc.proposal_spec(self.proposal)
        if self.hidden is not None and self.hidden < 1:
            raise ConfigError("hidden must be >= 1")
        if self.phase_init not in ("none", "staggered"):
            raise ConfigError(f"unknown phase_init {self.phase_init!r}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainingConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class TrainingTrace:
    energy: list = field(default_factory=list)
    variance: list = field(default_factory=list)
    var_ratio: list = field(default_factory=list)
    acceptance: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    fit_residual: list = field(default_factory=list)
    final_params: _rbm.RbmParams | None = None
    best_params: _rbm.RbmParams | None = None
    best_energy: float = math.nan
    converged: bool = False
    window: int = 20

    @property
    def epochs(self) -> int:
        return len(self.energy)

    def energies(self) -> np.ndarray:
        return np.real(np.array(self.energy, dtype=complex))

    def window_mean(self, window: int | None = None):
        w = self.window if window is None else window
        e = self.energies()[-w:]
        return float(e.mean()), float(e.std())

    def rows(self):
        for k in range(self.epochs):
            e = self.energy[k]
            yield (k, e.real, e.imag, self.variance[k], self.var_ratio[k],
                   self.acceptance[k], self.grad_norm[k])


def _ratio(var, mu):
    return var / abs(mu) ** 2 if abs(mu) > 0 else math.nan


def train(H: PauliHamiltonian, config: TrainingConfig | None = None,
          initial_params: _rbm.RbmParams | None = None, callback=None) -> TrainingTrace:
    """Run the epoch loop until self-convergence or epochs_max."""
    cfg = config or TrainingConfig()
    cfg.validate()
    n = H.n
    if initial_params is None and cfg.warm_start_path:
        initial_params = _rbm.RbmParams.load(cfg.warm_start_path)
    if initial_params is None:
        m = cfg.hidden if cfg.hidden is not None else 2 * n
        params = _rbm.random_init(n, m, cfg.beta, cfg.init_scale, seed=np.random.SeedSequence([cfg.seed, 0x5eed]))
        if cfg.phase_init == "staggered":
            params = _rbm.with_staggered_phase(params)
    else:
        params = initial_params
    if params.n != n:
        raise ConfigError(f"initial parameters have n={params.n}, Hamiltonian has n={n}")
    opt = Adam(cfg.learning_rate) if cfg.optimizer == "adam" else SGD(cfg.learning_rate)
    spec = mcmc.proposal_spec(cfg.proposal)
    trace = TrainingTrace(window=cfg.window)
    recent: list = []
    x = params.to_vector()
    for epoch in range(cfg.epochs_max):
        ss = np.random.SeedSequence([cfg.seed, epoch])
        fit_seed, chain_seed = ss.spawn(2)
        try:
            configs = select_fit_configs(params, cfg.fit_total, cfg.fit_top_fraction, seed=fit_seed)
            model, report = fit(params, configs)
            chain = mcmc.run_chain(spec.with_model(model) if spec.is_quantum else spec, model,
                                   cfg.samples_per_epoch, cfg.burn_in_fraction, seed=chain_seed)
            st = estimate_all(chain.retained, params, model, H)
        except NumericalError as exc:
            raise NumericalError(f"epoch {epoch}: {exc}; state: {json.dumps(params.to_json())}") from exc
        mu = st.energy
        trace.energy.append(mu)
        trace.variance.append(st.variance)
        trace.var_ratio.append(_ratio(st.variance, mu))
        trace.acceptance.append(chain.acceptance_rate)
        trace.grad_norm.append(float(np.linalg.norm(st.gradient)))
        trace.fit_residual.append(report.refined_residual)
        recent.append((mu.real, params))
        recent = recent[-cfg.window:]
        if callback is not None:
            callback(epoch, trace, params)
        log.debug("epoch %d energy %.6f var %.3e acc %.3f", epoch, mu.real, st.variance,
                  chain.acceptance_rate)
        if _converged(trace, cfg):
            trace.converged = True
            break
        x = opt.step(x, st.gradient)
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"epoch {epoch}: parameter update produced non-finite values")
        params = _rbm.RbmParams.from_vector(x, params.n, params.m, params.beta)
    best = min(recent, key=lambda r: r[0])
    trace.best_energy, trace.best_params = best
    trace.final_params = params
    return trace


def _converged(trace: TrainingTrace, cfg: TrainingConfig) -> bool:
    e = trace.energies()
    if e.size < 2:
        return False
    deltas = np.abs(np.diff(e))
    if trace.variance[-1] <= ZERO_VARIANCE * max(1.0, e[-1] ** 2) and deltas[-1] < cfg.convergence_tol:
        return True
    k = cfg.convergence_count
    return deltas.size >= k and bool(np.all(deltas[-k:] < cfg.convergence_tol))


# ---------------------------------------------------------------------------
# zero-variance extrapolation


@dataclass(frozen=True)
class ZveResult:
    extrapolated_energy: float
    slope: float
    fit_points: int
    degenerate: bool = False
    zero_variance: bool = False


def zve(trace_or_points, window: int = 20) -> ZveResult:
    """Intercept of the least-squares line E = a + b Var/E^2 over the last window epochs.

    Epochs with Var/E^2 <= ZERO_VARIANCE already sit at the intercept, so when the
    window contains any, their mean energy is returned with zero_variance set.
    """
    if isinstance(trace_or_points, TrainingTrace):
        e = trace_or_points.energies()
        x = np.asarray(trace_or_points.var_ratio, dtype=float)
    else:
        x, e = (np.asarray(a, dtype=float) for a in trace_or_points)
    x, e = x[-window:], e[-window:]
    ok = np.isfinite(x) & np.isfinite(e)
    x, e = x[ok], e[ok]
    zero = x <= ZERO_VARIANCE
    if np.any(zero):
        # an eigenstate was reached; its energy is observed rather than extrapolated
        return ZveResult(float(e[zero].mean()), 0.0, int(zero.sum()), False, True)
    if x.size < 3:
        raise ConfigError("zero-variance extrapolation needs at least 3 finite points")
    if np.max(x) - np.min(x) <= 1e-14:
        return ZveResult(float(e.mean()), 0.0, int(x.size), True)
    xm = x.mean()
    b = float(np.sum((x - xm) * (e - e.mean())) / np.sum((x - xm) ** 2))
    a = float(e.mean() - b * xm)
    return ZveResult(a, b, int(x.size))


# ---------------------------------------------------------------------------
# warm-started parameter sweeps


@dataclass
class SweepPoint:
    delta: float
    trace: TrainingTrace
    zve: ZveResult | None  # None when the run was too short to extrapolate
    warm_from: float | None


def _crosses_ferro_boundary(prev: float, cur: float, J: float) -> bool:
    # delta / J = -1 is a first-order transition into the fully polarized phase
    return (prev / J < -1.0) != (cur / J < -1.0)


def xxz_sweep(n: int = 8, deltas=(2.0, 1.0, 0.0, -1.0, -2.0), J: float = 1.0,
              config: TrainingConfig | None = None, restart: str = "phase",
              periodic: bool = False, initial_params: _rbm.RbmParams | None = None,
              callback=None) -> list:
    """Train along a list of anisotropies, warm-starting each point from the previous one.

    restart selects when a point starts cold instead: "phase" when the step
    crosses delta / J = -1 (the polarized ground state there is orthogonal to
    the state on the other side, so carrying parameters across only stalls),
    "always" for every point, "never" to chain every step. The first point
    starts from initial_params if given, else cold.
    """
    from .hamiltonian import xxz
    if restart not in ("phase", "always", "never"):
        raise ConfigError(f"unknown restart rule {restart!r}")
    if J == 0:
        raise ConfigError("J must be nonzero")
    cfg = config or TrainingConfig(phase_init="staggered")
    out = []
    prev_delta, prev_params = None, initial_params
    for d in deltas:
        d = float(d)
        warm = prev_params
        if prev_delta is not None and (restart == "always" or
                                       (restart == "phase" and _crosses_ferro_boundary(prev_delta, d, J))):
            warm = None
        H = xxz(n, J, d, periodic)
        run_cfg = cfg if prev_delta is None else dataclasses.replace(cfg, warm_start_path=None)
        trace = train(H, run_cfg, initial_params=warm)
        try:
            z = zve(trace, cfg.window)
        except ConfigError:
            z = None
        point = SweepPoint(d, trace, z, prev_delta if warm is not None else None)
        out.append(point)
        if callback is not None:
            callback(point)
        prev_delta, prev_params = d, trace.final_params
    return out
