"""Complex-parameter RBM density matrix over visible spins.

The unnormalized matrix element factorizes as
rho(v, v') = f(v) * conj(f(v')) with

    log f(v) = -beta * a.v + sum_j logcosh(beta * (b_j + sum_i W_ij v_i)),

so everything is evaluated through ``log_f`` in the log domain.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .exceptions import ConfigError, NumericalError

LOG2 = np.log(2.0)
KINDS = ("ReA", "ImA", "ReB", "ImB", "ReW", "ImW")


def logcosh(z):
    """Principal-branch log(cosh(z)) that stays finite for large |Re z|."""
    z = np.asarray(z, dtype=complex)
    s = np.where(z.real >= 0, 1.0, -1.0)
    sz = s * z
    return sz + np.log1p(np.exp(-2.0 * sz)) - LOG2


@dataclass(frozen=True)
class RbmParams:
    a: np.ndarray
    b: np.ndarray
    W: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        a = np.array(self.a, dtype=complex).reshape(-1)
        b = np.array(self.b, dtype=complex).reshape(-1)
        W = np.array(self.W, dtype=complex)
        if a.size < 1 or b.size < 1:
            raise ConfigError("need n >= 1 visible and m >= 1 hidden units")
        if W.shape != (a.size, b.size):
            raise ConfigError(f"W has shape {W.shape}, expected {(a.size, b.size)}")
        if not self.beta > 0:
            raise ConfigError("beta must be positive")
        for name, arr in (("a", a), ("b", b), ("W", W)):
            if not np.all(np.isfinite(arr)):
                raise NumericalError(f"non-finite entries in {name}")
            arr.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def num_real(self) -> int:
        return 2 * (self.n + self.m + self.n * self.m)

    def to_vector(self) -> np.ndarray:
        """Real coordinates in canonical order [ReA, ImA, ReB, ImB, ReW, ImW]."""
        w = self.W.reshape(-1)
        return np.concatenate([self.a.real, self.a.imag, self.b.real, self.b.imag,
                               w.real, w.imag])

    @classmethod
    def from_vector(cls, x, n: int, m: int, beta: float = 1.0) -> "RbmParams":
        x = np.asarray(x, dtype=float)
        if x.size != 2 * (n + m + n * m):
            raise ConfigError("parameter vector has the wrong length")
        a = x[:n] + 1j * x[n:2 * n]
        o = 2 * n
        b = x[o:o + m] + 1j * x[o + m:o + 2 * m]
        o += 2 * m
        nm = n * m
        W = (x[o:o + nm] + 1j * x[o + nm:o + 2 * nm]).reshape(n, m)
        return cls(a, b, W, beta)

    def to_json(self) -> dict:
        pairs = lambda z: [[float(c.real), float(c.imag)] for c in np.ravel(z)]
        return {"n": self.n, "m": self.m, "beta": self.beta,
                "a": pairs(self.a), "b": pairs(self.b), "W": pairs(self.W)}

    @classmethod
    def from_json(cls, doc: dict) -> "RbmParams":
        try:
            n, m = int(doc["n"]), int(doc["m"])
            unpack = lambda key: np.array([complex(re, im) for re, im in doc[key]])
            a, b, W = unpack("a"), unpack("b"), unpack("W")
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed parameter snapshot: {exc}") from exc
        if a.size != n or b.size != m or W.size != n * m:
            raise ConfigError("parameter snapshot sizes do not match n, m")
        return cls(a, b, W.reshape(n, m), float(doc.get("beta", 1.0)))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path) -> "RbmParams":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read parameter snapshot {path}: {exc}") from exc
        return cls.from_json(doc)


def zeros(n: int, m: int, beta: float = 1.0) -> RbmParams:
    return RbmParams(np.zeros(n), np.zeros(m), np.zeros((n, m)), beta)


def random_init(n: int, m: int | None = None, beta: float = 1.0, scale: float = 0.05,
                seed=None) -> RbmParams:
    """Real and imaginary parts i.i.d. uniform in [-scale, scale]."""
    if m is None:
        m = 2 * n
    if scale < 0:
        raise ConfigError("scale must be non-negative")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-scale, scale, size=2 * (n + m + n * m))
    return RbmParams.from_vector(x, n, m, beta)


def with_staggered_phase(params: RbmParams, phase: float = np.pi / 4) -> RbmParams:
    """Add +-phase alternating by site to Im(a).

    f(v) then carries the factor exp(-i phase sum_i (-1)^i v_i). With phase = pi/4
    this is the sublattice sign (-1)^(up spins on odd sites) times a phase that
    depends only on the total magnetization.
    """
    stag = np.where(np.arange(params.n) % 2 == 0, 1.0, -1.0)
    return RbmParams(params.a + 1j * phase * stag / params.beta, params.b, params.W, params.beta)


def _check_finite(x, what: str):
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite {what}; parameters have blown up")
    return x


def _theta(params: RbmParams, V: np.ndarray) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    if V.shape[-1] != params.n:
        raise ConfigError(f"configuration length {V.shape[-1]} != n={params.n}")
    return params.beta * (params.b + V @ params.W)


def log_f(params: RbmParams, V) -> np.ndarray:
    """Log of the single-copy factor f(v); works on (..., n) batches."""
    V = np.asarray(V, dtype=float)
    th = _theta(params, V)
    out = -params.beta * (V @ params.a) + logcosh(th).sum(axis=-1)
    return _check_finite(out, "log amplitude")


def log_rho(params: RbmParams, v, vp) -> Union[complex, np.ndarray]:
    """log rho(v, v') of the unnormalized density matrix."""
    out = log_f(params, v) + np.conj(log_f(params, vp))
    return out[()] if np.ndim(out) == 0 else out


def log_rho_diag(params: RbmParams, v) -> Union[float, np.ndarray]:
    out = 2.0 * log_f(params, v).real
    return out[()] if np.ndim(out) == 0 else out


def holomorphic_grad(params: RbmParams, V) -> np.ndarray:
    """d log f / d(a, b, W) as complex vectors of length n + m + n*m."""
    V = np.asarray(V, dtype=float)
    t = np.tanh(_theta(params, V))
    beta = params.beta
    da = -beta * V
    db = beta * t
    dW = beta * (V[..., :, None] * t[..., None, :])
    dW = dW.reshape(V.shape[:-1] + (params.n * params.m,))
    return np.concatenate([da.astype(complex), db, dW], axis=-1)


def _assemble(params: RbmParams, ov: np.ndarray, ovp_conj: np.ndarray) -> np.ndarray:
    n, m = params.n, params.m
    re = ov + ovp_conj
    im = 1j * (ov - ovp_conj)
    sa, sb = slice(0, n), slice(n, n + m)
    sw = slice(n + m, n + m + n * m)
    return np.concatenate([re[..., sa], im[..., sa], re[..., sb], im[..., sb],
                           re[..., sw], im[..., sw]], axis=-1)


def grad_log_rho_vector(params: RbmParams, v, vp) -> np.ndarray:
    """Log-derivatives of rho(v, v') w.r.t. every real coordinate, canonical order."""
    ov = holomorphic_grad(params, v)
    ovp = np.conj(holomorphic_grad(params, vp))
    return _assemble(params, ov, ovp)


@dataclass(frozen=True)
class ParamCoordinate:
    kind: str
    index: Union[int, tuple]

    def offset(self, n: int, m: int) -> int:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown coordinate kind {self.kind!r}")
        k = KINDS.index(self.kind)
        if k < 2:
            size, base = n, k * n
        elif k < 4:
            size, base = m, 2 * n + (k - 2) * m
        else:
            size, base = n * m, 2 * n + 2 * m + (k - 4) * n * m
        idx = self.index
        if k >= 4:
            if isinstance(idx, (tuple, list)):
                i, j = idx
                if not (0 <= i < n and 0 <= j < m):
                    raise ConfigError(f"weight index {idx} out of range")
                idx = i * m + j
        if not isinstance(idx, (int, np.integer)) or not 0 <= idx < size:
            raise ConfigError(f"index {self.index} out of range for {self.kind}")
        return base + int(idx)


def coordinates(n: int, m: int) -> list:
    """All coordinates in canonical order."""
    out = []
    for kind, size in zip(KINDS, (n, n, m, m, n * m, n * m)):
        for k in range(size):
            idx = divmod(k, m) if kind in ("ReW", "ImW") else k
            out.append(ParamCoordinate(kind, idx))
    return out


def grad_log_rho(params: RbmParams, v, vp, coord: ParamCoordinate) -> complex:
    off = coord.offset(params.n, params.m)
    return complex(grad_log_rho_vector(params, v, vp)[off])
