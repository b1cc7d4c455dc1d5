"""Pauli-word Hamiltonians with real coefficients and their local energy."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import rbm as _rbm
from .configspace import as_config
from .exceptions import ConfigError, NumericalError

PAULI = "IXYZ"
UNDERFLOW_LOG = -700.0


class HamiltonianFormatError(ConfigError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def check_word(word: str, n: int | None = None) -> str:
    word = str(word).strip().upper()
    if not word or any(c not in PAULI for c in word):
        raise ConfigError(f"invalid Pauli word {word!r}")
    if n is not None and len(word) != n:
        raise ConfigError(f"word {word!r} has length {len(word)}, expected {n}")
    return word


@dataclass(frozen=True)
class PauliHamiltonian:
    """Sum of c_s * P_s; words read left to right as sites 0..n-1."""

    n: int
    terms: tuple = ()
    _compiled: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be >= 1")
        merged: dict = {}
        for coeff, word in self.terms:
            if isinstance(coeff, complex) or np.iscomplexobj(coeff):
                raise ConfigError("complex coefficients are not supported")
            c = float(coeff)
            if not np.isfinite(c):
                raise ConfigError(f"non-finite coefficient for {word}")
            w = check_word(word, self.n)
            merged[w] = merged.get(w, 0.0) + c
        object.__setattr__(self, "terms", tuple((c, w) for w, c in merged.items()))
        object.__setattr__(self, "_compiled", _compile(self.n, self.terms))

    def __len__(self):
        return len(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms], dtype=float)

    @property
    def words(self) -> list:
        return [w for _, w in self.terms]

    def connected(self, V):
        """Connected configurations and matrix elements for a batch.

        Returns (VP, mel) with VP of shape (..., S, n) and mel[..., s] equal to
        c_s * <v|P_s|v'_s>.
        """
        c = self._compiled
        V = np.asarray(V, dtype=np.int8)
        if V.shape[-1] != self.n:
            raise ConfigError(f"configuration length {V.shape[-1]} != n={self.n}")
        VP = V[..., None, :] * c["flip"]
        up = (V[..., None, :] > 0)
        ny_up = np.sum(up & c["y"], axis=-1)
        ny_dn = np.sum(~up & c["y"], axis=-1)
        nz_up = np.sum(up & c["z"], axis=-1)
        # <0|Y|1> = -i, <1|Y|0> = +i, <1|Z|1> = -1 with spin -1 <-> |0>
        power = (3 * ny_dn + ny_up + 2 * nz_up) % 4
        phase = np.array([1, 1j, -1, -1j])[power]
        return VP, c["coeffs"] * phase


def _compile(n: int, terms) -> dict:
    S = len(terms)
    flip = np.ones((S, n), dtype=np.int8)
    y = np.zeros((S, n), dtype=bool)
    z = np.zeros((S, n), dtype=bool)
    for s, (_, w) in enumerate(terms):
        for i, ch in enumerate(w):
            if ch in "XY":
                flip[s, i] = -1
            y[s, i] = ch == "Y"
            z[s, i] = ch == "Z"
    return {"flip": flip, "y": y, "z": z,
            "coeffs": np.array([c for c, _ in terms], dtype=float)}


def apply_word(word: str, v: Sequence[int]):
    """Return (v', c) with <v|P|v'> = c; v' is the unique nonzero column."""
    v = as_config(v)
    word = check_word(word)
    if len(word) != v.size:
        raise ConfigError(f"word length {len(word)} != configuration length {v.size}")
    vp = v.copy()
    phase = 1 + 0j
    for i, ch in enumerate(word):
        if ch == "X":
            vp[i] = -v[i]
        elif ch == "Y":
            vp[i] = -v[i]
            phase *= 1j if v[i] > 0 else -1j
        elif ch == "Z":
            phase *= -1 if v[i] > 0 else 1
    return vp, phase


def xxz(n: int, J: float = 1.0, delta: float = 1.0, periodic: bool = False) -> PauliHamiltonian:
    """sum over bonds of J (XX + YY) + delta ZZ; open chain by default."""
    if n < 2:
        raise ConfigError("xxz needs n >= 2")
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        bonds.append((n - 1, 0))
    terms = []
    for i, j in bonds:
        for p, c in (("X", J), ("Y", J), ("Z", delta)):
            if c != 0:
                w = ["I"] * n
                w[i] = w[j] = p
                terms.append((c, "".join(w)))
    return PauliHamiltonian(n, tuple(terms))


def parse_text(text: str) -> PauliHamiltonian:
    n = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise HamiltonianFormatError("expected header 'n <integer>'", lineno)
            try:
                n = int(parts[1])
            except ValueError:
                raise HamiltonianFormatError(f"bad system size {parts[1]!r}", lineno) from None
            if n < 1:
                raise HamiltonianFormatError("system size must be >= 1", lineno)
            continue
        if len(parts) != 2:
            raise HamiltonianFormatError("expected '<coefficient> <word>'", lineno)
        tok, word = parts
        if "j" in tok.lower():
            raise HamiltonianFormatError("complex coefficients are not supported", lineno)
        try:
            coeff = float(tok)
        except ValueError:
            raise HamiltonianFormatError(f"bad coefficient {tok!r}", lineno) from None
        if not np.isfinite(coeff):
            raise HamiltonianFormatError("non-finite coefficient", lineno)
        word = word.upper()
        if any(c not in PAULI for c in word):
            raise HamiltonianFormatError(f"invalid Pauli word {word!r}", lineno)
        if len(word) != n:
            raise HamiltonianFormatError(f"word length {len(word)} != n={n}", lineno)
        terms.append((coeff, word))
    if n is None:
        raise HamiltonianFormatError("missing header 'n <integer>'")
    return PauliHamiltonian(n, tuple(terms))


def parse_file(path) -> PauliHamiltonian:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read Hamiltonian file {path}: {exc}") from exc
    return parse_text(text)


def format_text(H: PauliHamiltonian) -> str:
    lines = [f"n {H.n}"]
    lines += [f"{c!r} {w}" for c, w in H.terms]
    return "\n".join(lines) + "\n"


def write_file(H: PauliHamiltonian, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_text(H))


def local_energies(H: PauliHamiltonian, params: "_rbm.RbmParams", V) -> np.ndarray:
    """E_loc for a batch of configurations of shape (k, n)."""
    V = np.atleast_2d(np.asarray(V, dtype=np.int8))
    if V.shape[-1] != params.n or H.n != params.n:
        raise ConfigError("Hamiltonian, parameters and configurations disagree on n")
    if len(H) == 0:
        return np.zeros(V.shape[0], dtype=complex)
    lf = _rbm.log_f(params, V)
    if np.any(2.0 * lf.real < UNDERFLOW_LOG):
        raise NumericalError("rho(v, v) underflows for a visited configuration")
    VP, mel = H.connected(V)
    lfp = _rbm.log_f(params, VP)
    # rho(v, v') / rho(v, v) = conj(f(v') / f(v))
    ratio = np.exp(np.conj(lfp - lf[:, None]))
    return np.sum(mel * ratio, axis=-1)


def local_energy(H: PauliHamiltonian, params: "_rbm.RbmParams", v) -> complex:
    return complex(local_energies(H, params, as_config(v)[None, :])[0])
