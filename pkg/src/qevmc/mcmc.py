"""Metropolis-Hastings sampling of the surrogate distribution.

Proposals:
  A  flip one uniformly chosen spin
  B  uniform over all configurations
  C  |<v'|U|v>|^2 for one Haar-random unitary per chain
  D  exact quantum evolution with (tau, gamma) drawn uniformly per step
  E, F, G  exact quantum evolution at fixed (tau, gamma)
  H  Trotterized quantum evolution, measured once

Every proposal is symmetric, so acceptance is min(1, phi(v') / phi(v)).
Quantum proposals use the surrogate's own couplings: with z = -v the Z field is
-l, which makes the diagonal of h1 equal to log phi up to the constant c0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import unitary_group

from . import quantumsim as qs
from .configspace import as_config, config_to_index, configs_to_indices, index_to_config, indices_to_configs
from .exceptions import ConfigError, NumericalError
from .surrogate import SurrogateModel, log_phi, log_phi_table

KERNEL_MAX_N = 10

_DEFAULTS = {
    "A": {}, "B": {}, "C": {},
    "D": {"gamma_range": (0.25, 0.6), "tau_range": (4.0, 20.0)},
    "E": {"tau": 20.0, "gamma": 0.425},
    "F": {"tau": 2.0, "gamma": 0.425},
    "G": {"tau": 11.0, "gamma": 0.425},
    "H": {"tau": 11.0, "gamma": 0.425, "dt": 0.2},
}
_ALIASES = {"A_local": "A", "B_uniform": "B", "C_haar": "C", "D_quantum_avg": "D",
            "E_q": "E", "F_q": "F", "G_q": "G", "H_trotter": "H"}
QUANTUM = ("D", "E", "F", "G", "H")


@dataclass(frozen=True)
class ProposalSpec:
    kind: str
    tau: float | None = None
    gamma: float | None = None
    dt: float | None = None
    gamma_range: tuple | None = None
    tau_range: tuple | None = None
    num_draws: int = 32
    l: np.ndarray | None = field(default=None, compare=False)
    J: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.gamma_range is not None and not self.gamma_range[0] <= self.gamma_range[1]:
            raise ConfigError("gamma_range must be ordered")
        if self.tau_range is not None and not self.tau_range[0] <= self.tau_range[1]:
            raise ConfigError("tau_range must be ordered")
        if self.kind in ("E", "F", "G", "H") and (self.tau is None or self.gamma is None):
            raise ConfigError(f"proposal {self.kind} needs tau and gamma")
        if self.kind == "H" and self.dt is None:
            raise ConfigError("proposal H needs dt")
        if self.kind == "D" and (self.gamma_range is None or self.tau_range is None):
            raise ConfigError("proposal D needs gamma_range and tau_range")

    @property
    def is_quantum(self) -> bool:
        return self.kind in QUANTUM

    def with_model(self, model: SurrogateModel) -> "ProposalSpec":
        """Attach the quantum couplings derived from a surrogate model."""
        return replace(self, l=-np.asarray(model.l, dtype=float), J=np.array(model.J, dtype=float))


def proposal_spec(kind: str, **overrides) -> ProposalSpec:
    k = _ALIASES.get(kind, kind)
    if k not in _DEFAULTS:
        raise ConfigError(f"unknown proposal {kind!r}")
    kw = dict(_DEFAULTS[k])
    kw.update(overrides)
    return ProposalSpec(k, **kw)


def _couplings(spec: ProposalSpec, n: int):
    if spec.l is None or spec.J is None:
        raise ConfigError(f"quantum proposal {spec.kind} needs couplings; call with_model first")
    if np.asarray(spec.l).size != n:
        raise ConfigError("proposal couplings do not match the configuration size")
    return spec.l, spec.J


def _sample_column(col_probs: np.ndarray, u: float) -> int:
    c = np.cumsum(col_probs)
    return min(int(np.searchsorted(c, u * c[-1], side="right")), c.size - 1)


def propose(spec: ProposalSpec, v, rng: np.random.Generator) -> np.ndarray:
    """One proposal draw from configuration v (a fresh unitary for C)."""
    v = as_config(v)
    n = v.size
    k = spec.kind
    if k == "A":
        out = v.copy()
        out[rng.integers(n)] *= -1
        return out
    if k == "B":
        return index_to_config(int(rng.integers(1 << n)), n)
    idx = config_to_index(v)
    if k == "C":
        U = unitary_group.rvs(1 << n, random_state=rng)
        return index_to_config(_sample_column(np.abs(U[:, idx]) ** 2, rng.random()), n)
    l, J = _couplings(spec, n)
    if k == "H":
        p = qs.ProposalCircuitParams(l, J, spec.gamma, spec.tau, spec.dt)
        return qs.sample_measure(qs.evolve_trotter(v, p), rng)
    if k == "D":
        gamma = rng.uniform(*spec.gamma_range)
        tau = rng.uniform(*spec.tau_range)
    else:
        gamma, tau = spec.gamma, spec.tau
    return qs.sample_measure(qs.evolve_exact(v, l, J, gamma, tau), rng)


def proposal_matrix(spec: ProposalSpec, n: int, rng: np.random.Generator | None = None,
                    symmetrize: bool = True) -> np.ndarray:
    """P[v', v] = probability of proposing v' from v, in index order."""
    if n > KERNEL_MAX_N:
        raise ConfigError(f"dense proposal kernels limited to n <= {KERNEL_MAX_N}")
    dim = 1 << n
    k = spec.kind
    rng = np.random.default_rng() if rng is None else rng
    if k == "A":
        P = np.zeros((dim, dim))
        idx = np.arange(dim)
        for q in range(n):
            P[idx ^ (1 << q), idx] = 1.0 / n
        return P
    if k == "B":
        return np.full((dim, dim), 1.0 / dim)
    if k == "C":
        P = np.abs(unitary_group.rvs(dim, random_state=rng)) ** 2
        return 0.5 * (P + P.T) if symmetrize else P
    l, J = _couplings(spec, n)
    if k == "H":
        U = qs.trotter_unitary(qs.ProposalCircuitParams(l, J, spec.gamma, spec.tau, spec.dt))
        return np.abs(U) ** 2
    if k == "D":
        P = np.zeros((dim, dim))
        for _ in range(spec.num_draws):
            g = rng.uniform(*spec.gamma_range)
            t = rng.uniform(*spec.tau_range)
            P += np.abs(qs.exact_unitary(l, J, g, t)) ** 2
        return P / spec.num_draws
    return np.abs(qs.exact_unitary(l, J, spec.gamma, spec.tau)) ** 2


class _Kernel:
    """Per-chain proposal sampler working on integer indices."""

    def __init__(self, spec: ProposalSpec, n: int, rng: np.random.Generator):
        self.spec, self.n = spec, n
        self.cum = None
        self.prop = None
        k = spec.kind
        if k in ("C", "E", "F", "G", "H") and n <= KERNEL_MAX_N:
            P = proposal_matrix(spec, n, rng, symmetrize=False)
            self.cum = np.cumsum(P, axis=0)
        elif k == "D":
            l, J = _couplings(spec, n)
            self.l, self.J = l, J
        elif k in ("E", "F", "G"):
            l, J = _couplings(spec, n)
            self.prop = qs.ExactPropagator(l, J, spec.gamma)
        elif k == "H":
            l, J = _couplings(spec, n)
            self.circ = qs.ProposalCircuitParams(l, J, spec.gamma, spec.tau, spec.dt)
        elif k == "C":
            raise ConfigError(f"Haar proposal limited to n <= {KERNEL_MAX_N}")

    def draw(self, idx: int, rng: np.random.Generator) -> int:
        k, n = self.spec.kind, self.n
        if k == "A":
            return idx ^ (1 << int(rng.integers(n)))
        if k == "B":
            return int(rng.integers(1 << n))
        if self.cum is not None:
            col = self.cum[:, idx]
            return min(int(np.searchsorted(col, rng.random() * col[-1], side="right")), col.size - 1)
        if k == "D":
            g = rng.uniform(*self.spec.gamma_range)
            t = rng.uniform(*self.spec.tau_range)
            col = qs.ExactPropagator(self.l, self.J, g).column(idx, t)
        elif k == "H":
            col = qs.trotter_apply(qs.basis_state(index_to_config(idx, n)), self.circ)
        else:
            col = self.prop.column(idx, self.spec.tau)
        return _sample_column(np.abs(col) ** 2, rng.random())


def mh_step(spec: ProposalSpec, model: SurrogateModel, v, rng: np.random.Generator):
    """One Metropolis-Hastings step; returns (v_next, accepted)."""
    v = as_config(v)
    if spec.is_quantum and spec.l is None:
        spec = spec.with_model(model)
    vp = propose(spec, v, rng)
    d = float(log_phi(model, vp) - log_phi(model, v))
    if d >= 0 or rng.random() < math.exp(d):
        return vp, True
    return v, False


@dataclass(frozen=True)
class ChainResult:
    samples: np.ndarray  # (n_samples, n) int8, burn-in included
    acceptance_rate: float
    seed: object
    burn_in_count: int
    accepted: int = 0
    steps: int = 0

    @property
    def retained(self) -> np.ndarray:
        return self.samples[self.burn_in_count:]

    @property
    def indices(self) -> np.ndarray:
        return configs_to_indices(self.samples)


def run_chain(spec: ProposalSpec, model: SurrogateModel, n_samples: int,
              burn_in_fraction: float = 0.1, seed=None, initial=None) -> ChainResult:
    """Run one chain of n_samples MH steps from a uniform random start.

    The first ceil(burn_in_fraction * n_samples) samples are kept in the
    result but excluded by ``ChainResult.retained``.
    """
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    if not 0 <= burn_in_fraction < 1:
        raise ConfigError("burn_in_fraction must lie in [0, 1)")
    n = model.n
    if spec.is_quantum and spec.l is None:
        spec = spec.with_model(model)
    rng = np.random.default_rng(seed)
    kernel = _Kernel(spec, n, rng)
    table = log_phi_table(model) if n <= 20 else None
    lp = (lambda i: table[i]) if table is not None else (lambda i: float(log_phi(model, index_to_config(i, n))))
    cur = int(rng.integers(1 << n)) if initial is None else config_to_index(initial)
    cur_lp = lp(cur)
    out = np.empty(n_samples, dtype=np.int64)
    accepted = 0
    for t in range(n_samples):
        prop = kernel.draw(cur, rng)
        new_lp = lp(prop)
        d = new_lp - cur_lp
        if d >= 0 or rng.random() < math.exp(d):
            cur, cur_lp = prop, new_lp
            accepted += 1
        out[t] = cur
    burn = math.ceil(burn_in_fraction * n_samples)
    return ChainResult(indices_to_configs(out, n), accepted / n_samples, seed, burn,
                       accepted, n_samples)


def chain_seed(base_seed: int, chain_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(base_seed), int(chain_index)])


def run_chains(spec: ProposalSpec, model: SurrogateModel, n_chains: int, n_samples: int,
               burn_in_fraction: float = 0.1, seed: int = 0) -> list:
    """Independent chains with seeds derived from (seed, chain index)."""
    return [run_chain(spec, model, n_samples, burn_in_fraction, chain_seed(seed, c))
            for c in range(n_chains)]


# ---------------------------------------------------------------------------
# transition-matrix analysis


def exact_phi(model: SurrogateModel) -> np.ndarray:
    lp = log_phi_table(model)
    p = np.exp(lp - lp.max())
    return p / p.sum()


def build_transition_matrix(spec: ProposalSpec, model: SurrogateModel, seed=None) -> np.ndarray:
    """Column-stochastic MH matrix T[v', v] for the surrogate distribution."""
    n = model.n
    if n > KERNEL_MAX_N:
        raise ConfigError(f"transition matrices limited to n <= {KERNEL_MAX_N}")
    if spec.is_quantum and spec.l is None:
        spec = spec.with_model(model)
    P = proposal_matrix(spec, n, np.random.default_rng(seed), symmetrize=True)
    lp = log_phi_table(model)
    acc = np.exp(np.minimum(0.0, lp[:, None] - lp[None, :]))
    T = acc * P
    np.fill_diagonal(T, 0.0)
    T[np.diag_indices_from(T)] = 1.0 - T.sum(axis=0)
    return T


def spectral_gap(T: np.ndarray, phi: np.ndarray, absolute: bool = False) -> float:
    """lambda_0 - lambda_1 of a reversible column-stochastic matrix.

    T is symmetrized as D^-1/2 T D^1/2 with D = diag(phi), which is the
    similarity transform that makes a detailed-balance matrix symmetric in the
    column convention.
    """
    phi = np.asarray(phi, dtype=float)
    s = np.sqrt(phi)
    S = T * s[None, :] / s[:, None]
    asym = np.max(np.abs(S - S.T))
    if asym > 1e-6:
        raise NumericalError(f"transition matrix violates detailed balance (asymmetry {asym:.2e})")
    ev = np.sort(np.linalg.eigvalsh(0.5 * (S + S.T)))[::-1]
    if abs(ev[0] - 1.0) > 1e-9:
        raise NumericalError(f"leading eigenvalue {ev[0]!r} differs from 1")
    if ev.size == 1:
        return 1.0
    if absolute:
        return float(1.0 - np.max(np.abs(ev[1:])))
    return float(ev[0] - ev[1])


@dataclass(frozen=True)
class MixingBounds:
    lower: float
    upper: float
    unbounded: bool = False


def mixing_time_bounds(delta: float, phi, e: float) -> MixingBounds:
    """Spectral-gap bounds on the e-mixing time."""
    if not 0 < e < 0.5:
        raise ConfigError("e must lie in (0, 1/2)")
    pmin = float(np.min(phi))
    if not pmin > 0:
        raise ConfigError("phi must be strictly positive")
    if delta <= 0:
        return MixingBounds(math.inf, math.inf, True)
    if delta > 1:
        raise ConfigError("delta must lie in (0, 1]")
    lower = (1.0 / delta - 1.0) * math.log(1.0 / (2.0 * e))
    upper = (1.0 / delta) * math.log(1.0 / (e * pmin))
    return MixingBounds(lower, upper)


def autocorrelation(x: np.ndarray, lags) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    x = x - x.mean()
    var = float(x @ x) / x.size
    out = []
    for lag in lags:
        if var == 0:
            out.append(1.0 if lag == 0 else 0.0)
        elif lag >= x.size:
            out.append(float("nan"))
        else:
            out.append(float(x[:x.size - lag] @ x[lag:]) / (x.size * var))
    return np.array(out)


def empirical_distribution(samples: np.ndarray, n: int) -> np.ndarray:
    counts = np.bincount(configs_to_indices(samples), minlength=1 << n).astype(float)
    return counts / counts.sum()


def diagnostics(result: ChainResult, model: SurrogateModel, lags=(0, 1, 2, 5, 10, 20, 50)) -> dict:
    """Distance of the retained-sample histogram from the exact distribution."""
    n = model.n
    if n > 16:
        raise ConfigError("exact comparison limited to small n")
    samples = result.retained
    if samples.shape[0] == 0:
        raise ConfigError("no retained samples")
    diff = empirical_distribution(samples, n) - exact_phi(model)
    series = log_phi(model, samples)
    return {"l2_error": float(np.linalg.norm(diff)),
            "tv_distance": float(0.5 * np.abs(diff).sum()),
            "autocorr": dict(zip(lags, autocorrelation(series, lags).tolist()))}


def random_ising_model(n: int, rng: np.random.Generator, scale: float = 1.0) -> SurrogateModel:
    """(l, J) entries i.i.d. uniform in [-scale, scale]."""
    l = rng.uniform(-scale, scale, n)
    J = np.triu(rng.uniform(-scale, scale, (n, n)), 1)
    return SurrogateModel(n, 2, 0.0, l, J)
