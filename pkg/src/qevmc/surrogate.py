"""Surrogate Ising network: truncated-polynomial log-distribution phi.

log phi(v) = c0 + sum_i l_i v_i + sum_{i<j} J_ij v_i v_j (+ higher monomials).
The model is fitted to the RBM diagonal, and kappa = rho_vv / phi(v) corrects
surrogate-weighted averages back to rho averages.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import rbm as _rbm
from .configspace import Multidex, all_configs, configs_to_indices, indices_to_configs
from .exceptions import ConfigError, NumericalError
from .hamiltonian import PauliHamiltonian, local_energies

ZERO_GUARD = 1e-300


def monomial_sites(n: int, order: int) -> list:
    """Site tuples of all monomials up to the given order, by weight then lexicographic."""
    out = []
    for k in range(0, min(order, n) + 1):
        out.extend(itertools.combinations(range(n), k))
    return out


def design_matrix(V, sites: list) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    A = np.ones((V.shape[0], len(sites)))
    for c, s in enumerate(sites):
        for i in s:
            A[:, c] *= V[:, i]
    return A


@dataclass(frozen=True)
class SurrogateModel:
    n: int
    order: int
    c0: float
    l: np.ndarray
    J: np.ndarray
    higher: dict = field(default_factory=dict)  # site tuple -> coefficient, weight > 2

    def __post_init__(self):
        l = np.array(self.l, dtype=float).reshape(-1)
        J = np.array(self.J, dtype=float)
        if self.order < 1:
            raise ConfigError("order must be >= 1")
        if l.size != self.n or J.shape != (self.n, self.n):
            raise ConfigError("surrogate coefficient shapes do not match n")
        if np.any(np.tril(J) != 0):
            raise ConfigError("J must be strictly upper triangular")
        higher = {tuple(sorted(k)): float(c) for k, c in self.higher.items()}
        if any(len(k) <= 2 for k in higher) or (higher and self.order <= 2):
            raise ConfigError("higher-order terms need weight > 2 and order > 2")
        vals = [self.c0, *l, *J.ravel(), *higher.values()]
        if not np.all(np.isfinite(vals)):
            raise NumericalError("non-finite surrogate coefficients")
        l.setflags(write=False)
        J.setflags(write=False)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "higher", higher)

    @classmethod
    def zeros(cls, n: int, order: int = 2) -> "SurrogateModel":
        return cls(n, order, 0.0, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def from_theta(cls, theta, n: int, order: int) -> "SurrogateModel":
        sites = monomial_sites(n, order)
        l = np.zeros(n)
        J = np.zeros((n, n))
        higher = {}
        c0 = 0.0
        for s, c in zip(sites, theta):
            if len(s) == 0:
                c0 = float(c)
            elif len(s) == 1:
                l[s[0]] = c
            elif len(s) == 2:
                J[s] = c
            else:
                higher[s] = float(c)
        return cls(n, order, c0, l, J, higher)

    def theta(self) -> np.ndarray:
        out = []
        for s in monomial_sites(self.n, self.order):
            if len(s) == 0:
                out.append(self.c0)
            elif len(s) == 1:
                out.append(self.l[s[0]])
            elif len(s) == 2:
                out.append(self.J[s])
            else:
                out.append(self.higher.get(s, 0.0))
        return np.array(out)

    def to_json(self) -> dict:
        iu = np.triu_indices(self.n, 1)
        return {"n": self.n, "order": self.order, "c0": self.c0,
                "l": self.l.tolist(), "J": self.J[iu].tolist(),
                "higher": [[list(k), c] for k, c in sorted(self.higher.items())]}

    @classmethod
    def from_json(cls, doc: dict) -> "SurrogateModel":
        n = int(doc["n"])
        J = np.zeros((n, n))
        J[np.triu_indices(n, 1)] = doc["J"]
        higher = {tuple(k): c for k, c in doc.get("higher", [])}
        return cls(n, int(doc["order"]), doc["c0"], doc["l"], J, higher)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)


def log_phi(model: SurrogateModel, v):
    """Unnormalized log-probability; accepts one config or a (k, n) batch."""
    V = np.asarray(v, dtype=float)
    if V.shape[-1] != model.n:
        raise ConfigError(f"configuration length {V.shape[-1]} != n={model.n}")
    out = model.c0 + V @ model.l + np.einsum("...i,ij,...j->...", V, model.J, V)
    for s, c in model.higher.items():
        out = out + c * np.prod(V[..., list(s)], axis=-1)
    return out[()] if np.ndim(out) == 0 else out


def log_phi_table(model: SurrogateModel) -> np.ndarray:
    """log phi over all 2**n configurations in index order."""
    return log_phi(model, all_configs(model.n))


# ---------------------------------------------------------------------------
# configuration selection


def _sgn(x):
    return np.where(np.asarray(x) >= 0, 1, -1).astype(np.int8)


def _sort_key(scores: dict):
    return lambda idx: (-scores[idx], idx)


def top_q_configs(params: _rbm.RbmParams, q: int) -> list:
    """Approximate q most likely configurations of the RBM diagonal.

    Seeds are the configurations maximizing the visible-bias term and the
    sign patterns of each hidden unit's weights; the best candidate is
    recorded and replaced by its single-flip neighbours, q times.
    """
    n = params.n
    if q < 1:
        raise ConfigError("q must be >= 1")
    q = min(q, 1 << n)
    seeds = [_sgn(-params.a.real)]
    for j in range(params.m):
        s = _sgn(params.W[:, j].real)
        seeds.extend([s, -s])
    scores: dict = {}

    def add(idx_list):
        new = [i for i in idx_list if i not in scores]
        if new:
            vals = _rbm.log_rho_diag(params, indices_to_configs(new, n))
            scores.update(zip(new, np.atleast_1d(vals).tolist()))

    seed_idx = list(dict.fromkeys(configs_to_indices(np.array(seeds)).tolist()))
    add(seed_idx)
    key = _sort_key(scores)
    candidates = sorted(seed_idx, key=key)
    recorded: list = []
    done: set = set()
    flips = 1 << np.arange(n)
    while len(recorded) < q:
        if not candidates:
            # every candidate was trimmed away; fall back to all unrecorded neighbours
            pool = {int(r ^ f) for r in recorded for f in flips} - done
            add(list(pool))
            candidates = sorted(pool, key=key)[:q]
            if not candidates:
                break
        best = candidates.pop(0)
        recorded.append(best)
        done.add(best)
        present = set(candidates)
        nbrs = [int(best ^ f) for f in flips]
        nbrs = [i for i in nbrs if i not in done and i not in present]
        add(nbrs)
        candidates = sorted(candidates + nbrs, key=key)[:q]
    recorded.sort(key=key)
    return [c for c in indices_to_configs(recorded, n)]


def select_fit_configs(params: _rbm.RbmParams, total: int | None = None,
                       top_fraction: float = 0.25, seed=None, return_counts: bool = False):
    """Union of approximate top configurations and uniform random fill.

    Returns a (total, n) int8 array with the top configurations first.
    """
    n = params.n
    dim = 1 << n
    if total is None:
        total = min(4 * n * n, dim)
    if not 0 <= top_fraction <= 1:
        raise ConfigError("top_fraction must lie in [0, 1]")
    if total < 1:
        raise ConfigError("total must be >= 1")
    total = min(total, dim)
    if total == dim:
        out = all_configs(n)
        return (out, 0, dim) if return_counts else out
    q = math.ceil(top_fraction * total)
    top_idx = []
    if q > 0:
        top_idx = configs_to_indices(np.array(top_q_configs(params, q))).tolist()
    rng = np.random.default_rng(seed)
    need = total - len(top_idx)
    rand_idx: list = []
    if need > 0:
        taken = set(top_idx)
        # rejection from the full space stays cheap while total << 2**n
        while len(rand_idx) < need:
            draw = rng.integers(0, dim, size=2 * need)
            for d in draw.tolist():
                if d not in taken:
                    taken.add(d)
                    rand_idx.append(d)
                    if len(rand_idx) == need:
                        break
    out = indices_to_configs(top_idx + rand_idx, n)
    return (out, len(top_idx), len(rand_idx)) if return_counts else out


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitReport:
    num_configs_total: int
    num_top: int
    num_random: int
    lsq_residual: float
    refined_residual: float
    refinement_iterations: int
    flagged: bool = False


def _targets(params, V):
    Y = np.asarray(_rbm.log_rho_diag(params, V), dtype=float)
    return np.where(np.isfinite(Y), Y, np.log(ZERO_GUARD))


def fit(params: _rbm.RbmParams, configs=None, order: int = 2, *, num_top: int | None = None,
        refine: bool = True, gtol: float = 1e-8, maxiter: int = 200, fd_step: float = 1e-7,
        residual_threshold: float = 0.1, seed=None):
    """Fit a surrogate to the RBM diagonal on the given configurations.

    Stage 1 is a weighted linear least-squares fit of log rho with weights
    proportional to rho (max-normalized). Stage 2 refines the coefficients by
    BFGS on the squared error of the probabilities themselves. The returned
    model is whichever of the two has the lower stage-2 objective.
    """
    n = params.n
    num_random = 0
    if configs is None:
        configs, num_top, num_random = select_fit_configs(params, seed=seed, return_counts=True)
    V = np.asarray(configs)
    if V.ndim != 2 or V.shape[1] != n:
        raise ConfigError("configs must be a (k, n) array")
    if num_top is None:
        num_top = 0
        num_random = V.shape[0]
    return fit_targets(V, _targets(params, V), order, refine=refine, gtol=gtol, maxiter=maxiter,
                       fd_step=fd_step, residual_threshold=residual_threshold,
                       num_top=num_top, num_random=num_random)


def fit_targets(V, Y, order: int = 2, *, refine: bool = True, gtol: float = 1e-8,
                maxiter: int = 200, fd_step: float = 1e-7, residual_threshold: float = 0.1,
                num_top: int = 0, num_random: int | None = None):
    """Two-stage fit of log-probability targets Y on configurations V."""
    V = np.asarray(V)
    Y = np.asarray(Y, dtype=float)
    n = V.shape[1]
    sites = monomial_sites(n, order)
    if V.shape[0] < len(sites):
        raise ConfigError(f"need at least {len(sites)} configurations, got {V.shape[0]}")
    A = design_matrix(V, sites)
    ymax = float(Y.max())
    w = np.exp(Y - ymax)
    AtT = A.T * w
    G = AtT @ A
    ridge = 1e-10 * np.trace(G) / G.shape[0]
    theta0 = np.linalg.solve(G + ridge * np.eye(G.shape[0]), AtT @ Y)

    def objective(th):
        r = np.exp(np.minimum(A @ th - ymax, 300.0)) - w
        return float(r @ r)

    f0 = objective(theta0)
    theta, f1, iters = theta0, f0, 0
    if refine:
        res = optimize.minimize(objective, theta0, method="BFGS",
                                options={"gtol": gtol, "maxiter": maxiter, "eps": fd_step})
        iters = int(res.nit)
        if np.all(np.isfinite(res.x)) and res.fun < f0:
            theta, f1 = res.x, float(res.fun)
    flagged = bool(f1 > residual_threshold * float(w @ w))
    model = SurrogateModel.from_theta(theta, n, order)
    if num_random is None:
        num_random = V.shape[0] - num_top
    report = FitReport(V.shape[0], int(num_top), int(num_random), f0, f1, iters, flagged)
    return model, report


# ---------------------------------------------------------------------------
# exact factorization oracle


def _walsh(vec: np.ndarray, n: int) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform over the little-endian index."""
    h = np.array(vec, dtype=float).reshape((2,) * n)
    for ax in range(n):
        a = np.take(h, 0, axis=ax)
        b = np.take(h, 1, axis=ax)
        h = np.stack([a + b, a - b], axis=ax)
    return h.reshape(-1)


def _weight_signs(n: int) -> np.ndarray:
    masks = np.arange(1 << n)
    pc = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pc += (masks >> i) & 1
    return np.where(pc % 2 == 0, 1.0, -1.0)


def exact_coefficient_array(log_p, n: int) -> np.ndarray:
    """C[a] = 2^-n sum_v log_p(v) F_a(v), indexed by the integer mask of a."""
    log_p = np.asarray(log_p, dtype=float)
    if n > 12:
        raise ConfigError("exact coefficients limited to n <= 12")
    if log_p.shape != (1 << n,):
        raise ConfigError("log_p must have 2**n entries")
    # F_a(v) = (-1)^|a| (-1)^(a . bits(v)) because v_i = 2 bit_i - 1
    return _weight_signs(n) * _walsh(log_p, n) / (1 << n)


def exact_coefficients(log_p, n: int) -> dict:
    C = exact_coefficient_array(log_p, n)
    return {Multidex.from_index(a, n): float(C[a]) for a in range(1 << n)}


def reconstruct(coeffs, n: int) -> np.ndarray:
    """sum_a C_a F_a(v) over all v, from an array or a Multidex map."""
    if isinstance(coeffs, dict):
        arr = np.zeros(1 << n)
        for a, c in coeffs.items():
            arr[a.to_index()] = c
        coeffs = arr
    return _walsh(_weight_signs(n) * np.asarray(coeffs, dtype=float), n)


def model_from_coefficients(coeffs, n: int, order: int | None = None) -> SurrogateModel:
    """Truncate an exact coefficient array to a SurrogateModel of given order."""
    if order is None:
        order = n
    C = np.asarray(coeffs, dtype=float)
    theta = [C[sum(1 << i for i in s)] for s in monomial_sites(n, order)]
    return SurrogateModel.from_theta(theta, n, max(order, 1))


# ---------------------------------------------------------------------------
# kappa kernels


def log_kappa(params: _rbm.RbmParams, model: SurrogateModel, v):
    out = np.asarray(_rbm.log_rho_diag(params, v)) - np.asarray(log_phi(model, v))
    if not np.all(np.isfinite(out)):
        raise NumericalError("non-finite log kappa")
    return out[()] if np.ndim(out) == 0 else out


def kappa(params: _rbm.RbmParams, model: SurrogateModel, v):
    lk = log_kappa(params, model, v)
    out = np.exp(lk)
    if not np.all(np.isfinite(out)):
        raise NumericalError("kappa overflows; use log_kappa")
    return out[()] if np.ndim(out) == 0 else out


def kappa_alpha(e_loc, alpha: float, lam: float):
    """1 / (lam |E_loc|^alpha)."""
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    mag = np.abs(np.asarray(e_loc))
    if alpha == 0:
        return np.ones_like(mag, dtype=float)[()] / lam
    if np.any(mag == 0) and alpha > 0:
        raise NumericalError("kappa_alpha is singular at E_loc = 0")
    out = 1.0 / (lam * mag ** alpha)
    return out[()] if np.ndim(out) == 0 else out


def variance_gap_bruteforce(H: PauliHamiltonian, params: _rbm.RbmParams, alpha: float):
    """Full-enumeration check of the kappa = 1/(lam |E|^alpha) variance identity.

    lhs = Var_rho(E_loc) - Var_phi(E_loc kappa) with phi = lam |E|^alpha rho;
    rhs = Cov_rho(|E|^(2 - alpha), |E|^alpha).
    """
    n = params.n
    if n > 6:
        raise ConfigError("brute-force variance check limited to n <= 6")
    V = all_configs(n)
    ld = _rbm.log_rho_diag(params, V)
    p = np.exp(ld - ld.max())
    p /= p.sum()
    E = local_energies(H, params, V)
    mag = np.abs(E)
    zero = mag == 0
    if np.any(zero) and alpha not in (0, 2):
        raise NumericalError("E_loc vanishes on a configuration; kernel is singular")
    mu = np.sum(p * E)
    var_rho = float(np.sum(p * mag ** 2) - abs(mu) ** 2)
    safe = np.where(zero, 1.0, mag)
    pw = np.where(zero, 0.0, safe ** alpha) if alpha != 0 else np.ones_like(mag)
    lam = 1.0 / np.sum(pw * p)
    phi = lam * pw * p
    kap = np.where(zero, 0.0, 1.0 / (lam * np.where(zero, 1.0, pw)))
    # phi |E kappa|^2 = rho |E|^(2 - alpha) / lam, whose E -> 0 limit is rho / lam at alpha = 2
    x = np.where(zero, 1.0 if alpha == 2 else 0.0, safe ** (2 - alpha))
    second = np.sum(np.where(zero, p * x / lam, phi * (mag * kap) ** 2))
    mean_phi = np.sum(phi * E * kap)
    var_phi = float(second - abs(mean_phi) ** 2)
    lhs = var_rho - var_phi
    rhs = float(np.sum(p * x * pw) - np.sum(p * x) * np.sum(p * pw))
    return float(lhs), rhs
