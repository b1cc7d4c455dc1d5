"""Statevector simulation of the proposal unitaries U(tau, gamma).

The generator is h = gamma * h1 + (1 - gamma) * h2 with the diagonal Ising part
h1 = sum_i l_i Z_i + sum_{i<j} J_ij Z_i Z_j and the transverse mixer
h2 = sum_i X_i. Qubit q is bit q of the basis index, so in a C-order reshape
to (2,)*n it lives on axis n - 1 - q.

Angle convention: Rz(t) = exp(-i t Z / 2), Rx(t) = exp(-i t X / 2),
Rzz(t) = exp(-i t Z Z / 2).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .configspace import all_configs, as_config, config_to_index, index_to_config
from .exceptions import ConfigError

MAX_EXACT_N = 12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
SX = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
# two-qubit matrices use kron(first listed qubit, second listed qubit)
ECR = (np.kron(I2, X) - np.kron(X, Y)) / np.sqrt(2)


def rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def rx(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def rzz(t: float) -> np.ndarray:
    return np.diag(np.exp(-0.5j * t * np.array([1, -1, -1, 1])))


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -np.exp(1j * lam) * s],
                     [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]])


# ---------------------------------------------------------------------------
# states


def basis_state(v) -> np.ndarray:
    v = as_config(v)
    psi = np.zeros(1 << v.size, dtype=complex)
    psi[config_to_index(v)] = 1.0
    return psi


def _num_qubits(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim != 1 << n or n < 1:
        raise ConfigError(f"state dimension {dim} is not a power of two")
    return n


def apply_1q(psi: np.ndarray, gate: np.ndarray, q: int) -> np.ndarray:
    """Apply a 2x2 gate to qubit q; psi may carry trailing batch columns."""
    dim = psi.shape[0]
    n = _num_qubits(dim)
    t = psi.reshape((2,) * n + psi.shape[1:])
    ax = n - 1 - q
    t = np.moveaxis(np.tensordot(gate, t, axes=([1], [ax])), 0, ax)
    return t.reshape(psi.shape)


def apply_2q(psi: np.ndarray, gate: np.ndarray, q0: int, q1: int) -> np.ndarray:
    dim = psi.shape[0]
    n = _num_qubits(dim)
    if q0 == q1:
        raise ConfigError("two-qubit gate needs distinct qubits")
    t = psi.reshape((2,) * n + psi.shape[1:])
    a0, a1 = n - 1 - q0, n - 1 - q1
    g = gate.reshape(2, 2, 2, 2)
    t = np.tensordot(g, t, axes=([2, 3], [a0, a1]))
    t = np.moveaxis(t, [0, 1], [a0, a1])
    return t.reshape(psi.shape)


def z_eigen(n: int) -> np.ndarray:
    """(2**n, n) array of Z eigenvalues per basis state; z = -v."""
    return -all_configs(n).astype(float)


def ising_diagonal(l, J) -> np.ndarray:
    """Diagonal of h1 = sum l_i Z_i + sum_{i<j} J_ij Z_i Z_j."""
    l = np.asarray(l, dtype=float)
    J = np.triu(np.asarray(J, dtype=float), 1)
    zs = z_eigen(l.size)
    return zs @ l + np.einsum("ki,ij,kj->k", zs, J, zs)


def mixer_all(psi: np.ndarray, angle: float) -> np.ndarray:
    """Rx(angle) on every qubit."""
    g = rx(angle)
    for q in range(_num_qubits(psi.shape[0])):
        psi = apply_1q(psi, g, q)
    return psi


def generator_dense(l, J, gamma: float) -> np.ndarray:
    l = np.asarray(l, dtype=float)
    n = l.size
    if n > MAX_EXACT_N:
        raise ConfigError(f"exact evolution limited to n <= {MAX_EXACT_N}; use the Trotterized path")
    dim = 1 << n
    h = np.diag(gamma * ising_diagonal(l, J)).astype(complex)
    idx = np.arange(dim)
    for q in range(n):
        h[idx ^ (1 << q), idx] += 1.0 - gamma
    return h


class ExactPropagator:
    """Eigendecomposition of h for repeated exp(-i h tau) at fixed gamma."""

    def __init__(self, l, J, gamma: float):
        h = generator_dense(l, J, gamma)
        self.evals, self.evecs = np.linalg.eigh(h)
        self.n = np.asarray(l).size

    def unitary(self, tau: float) -> np.ndarray:
        Q = self.evecs
        return (Q * np.exp(-1j * self.evals * tau)) @ Q.conj().T

    def column(self, index: int, tau: float) -> np.ndarray:
        Q = self.evecs
        return Q @ (np.exp(-1j * self.evals * tau) * Q[index].conj())


def evolve_exact(v, l, J, gamma: float, tau: float) -> np.ndarray:
    """exp(-i (gamma h1 + (1 - gamma) h2) tau) |v>."""
    v = as_config(v)
    if np.asarray(l).size != v.size:
        raise ConfigError("field vector length does not match the configuration")
    psi = ExactPropagator(l, J, gamma).column(config_to_index(v), tau)
    return psi / np.linalg.norm(psi)


def exact_unitary(l, J, gamma: float, tau: float) -> np.ndarray:
    return ExactPropagator(l, J, gamma).unitary(tau)


@dataclass(frozen=True)
class ProposalCircuitParams:
    l: np.ndarray
    J: np.ndarray
    gamma: float
    tau: float
    dt: float = 0.2
    n_trot: int = field(default=None)

    def __post_init__(self):
        l = np.array(self.l, dtype=float).reshape(-1)
        J = np.triu(np.array(self.J, dtype=float), 1)
        if J.shape != (l.size, l.size):
            raise ConfigError("J must be n x n")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")
        if not (self.tau > 0 and self.dt > 0):
            raise ConfigError("tau and dt must be positive")
        nt = self.n_trot if self.n_trot is not None else max(1, int(round(self.tau / self.dt)))
        if nt < 1:
            raise ConfigError("n_trot must be >= 1")
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "n_trot", int(nt))

    @property
    def n(self) -> int:
        return self.l.size

    @property
    def step(self) -> float:
        """Actual time slice tau / n_trot."""
        return self.tau / self.n_trot


def trotter_apply(psi: np.ndarray, params: ProposalCircuitParams) -> np.ndarray:
    """First-order product formula with diagonal phases applied elementwise."""
    dt = params.step
    phase = np.exp(-1j * params.gamma * dt * ising_diagonal(params.l, params.J))
    if psi.ndim == 2:
        phase = phase[:, None]
    angle = 2.0 * (1.0 - params.gamma) * dt
    for _ in range(params.n_trot):
        psi = phase * psi
        psi = mixer_all(psi, angle)
    return psi


def evolve_trotter(v, params: ProposalCircuitParams) -> np.ndarray:
    v = as_config(v)
    if v.size != params.n:
        raise ConfigError("configuration length does not match circuit size")
    return trotter_apply(basis_state(v), params)


def trotter_unitary(params: ProposalCircuitParams) -> np.ndarray:
    return trotter_apply(np.eye(1 << params.n, dtype=complex), params)


def sample_measure(state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    p = np.abs(state) ** 2
    c = np.cumsum(p)
    k = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    k = min(k, p.size - 1)
    return index_to_config(k, _num_qubits(p.size))


# ---------------------------------------------------------------------------
# gate lists

ONE_Q = {"rz": 1, "rx": 1, "x": 0, "sx": 0, "u3": 3}
TWO_Q = {"rzz": 1, "cx": 0, "ecr": 0}


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple
    angles: tuple = ()

    def __post_init__(self):
        name = self.name.lower()
        want = ONE_Q.get(name, TWO_Q.get(name))
        if want is None:
            raise ConfigError(f"unknown gate {self.name!r}")
        nq = 1 if name in ONE_Q else 2
        if len(self.qubits) != nq or len(self.angles) != want:
            raise ConfigError(f"gate {name} needs {nq} qubits and {want} angles")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))

    @property
    def is_two_qubit(self) -> bool:
        return self.name in TWO_Q

    def matrix(self) -> np.ndarray:
        n, a = self.name, self.angles
        if n == "rz":
            return rz(a[0])
        if n == "rx":
            return rx(a[0])
        if n == "x":
            return X
        if n == "sx":
            return SX
        if n == "u3":
            return u3(*a)
        if n == "rzz":
            return rzz(a[0])
        if n == "cx":
            return CNOT
        return ECR


class GateList:
    def __init__(self, n: int, gates: Iterable[Gate] = ()):
        self.n = int(n)
        self.gates = list(gates)
        for g in self.gates:
            if any(not 0 <= q < self.n for q in g.qubits):
                raise ConfigError(f"gate {g} addresses a qubit outside 0..{self.n - 1}")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __eq__(self, other):
        return isinstance(other, GateList) and self.n == other.n and self.gates == other.gates

    def extend(self, gates: Iterable[Gate]):
        for g in gates:
            self.gates.append(g)

    @property
    def one_qubit_count(self) -> int:
        return sum(not g.is_two_qubit for g in self.gates)

    @property
    def two_qubit_count(self) -> int:
        return sum(g.is_two_qubit for g in self.gates)

    def depth(self) -> int:
        """Greedy as-soon-as-possible layering on disjoint qubit sets."""
        level = [0] * self.n
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level) if self.gates else 0

    def apply(self, psi: np.ndarray) -> np.ndarray:
        for g in self.gates:
            if g.is_two_qubit:
                psi = apply_2q(psi, g.matrix(), *g.qubits)
            else:
                psi = apply_1q(psi, g.matrix(), g.qubits[0])
        return psi

    def unitary(self) -> np.ndarray:
        return self.apply(np.eye(1 << self.n, dtype=complex))


def cnot_gates(c: int, t: int, basis: str) -> list:
    if basis == "cnot":
        return [Gate("cx", (c, t))]
    if basis == "ecr":
        # CNOT(c, t) up to global phase, in time order
        return [Gate("rz", (c,), (-math.pi / 2,)),
                Gate("rz", (t,), (-math.pi,)), Gate("sx", (t,)), Gate("rz", (t,), (-math.pi,)),
                Gate("ecr", (t, c)),
                Gate("x", (c,))]
    raise ConfigError(f"unknown basis {basis!r}")


def decompose_multi_rzz(k: int, theta: float, basis: str = "cnot", qubits: Sequence[int] | None = None) -> GateList:
    """exp(-i theta/2 Z...Z) on k qubits as a CNOT ladder around one Rz.

    Uses 2(k - 1) entangling gates in either basis.
    """
    if k < 2:
        raise ConfigError("multi-qubit ZZ rotation needs k >= 2")
    qs = list(range(k)) if qubits is None else [int(q) for q in qubits]
    if len(qs) != k or len(set(qs)) != k:
        raise ConfigError("need k distinct qubits")
    ladder = []
    for i in range(k - 1):
        ladder.extend(cnot_gates(qs[i], qs[i + 1], basis))
    rev = []
    for i in reversed(range(k - 1)):
        rev.extend(cnot_gates(qs[i], qs[i + 1], basis))
    n = max(qs) + 1
    return GateList(n, ladder + [Gate("rz", (qs[-1],), (theta,))] + rev)


def round_robin_pairs(n: int) -> list:
    """All pairs i<j ordered in rounds of disjoint pairs (circle method)."""
    players = list(range(n)) + ([None] if n % 2 else [])
    N = len(players)
    out = []
    for _ in range(N - 1):
        for k in range(N // 2):
            p, q = players[k], players[N - 1 - k]
            if p is not None and q is not None:
                out.append((min(p, q), max(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return out


def trotter_circuit(params: ProposalCircuitParams, basis: str = "native", layers: int | None = None) -> GateList:
    """Gate-level Trotter circuit; basis is native (rzz), cnot or ecr."""
    if basis not in ("native", "cnot", "ecr"):
        raise ConfigError(f"unknown basis {basis!r}")
    n, dt, g = params.n, params.step, params.gamma
    nl = params.n_trot if layers is None else layers
    pairs = [(i, j) for i, j in round_robin_pairs(n) if params.J[i, j] != 0]
    layer = [Gate("rz", (q,), (2 * g * params.l[q] * dt,)) for q in range(n)]
    for i, j in pairs:
        theta = 2 * g * params.J[i, j] * dt
        if basis == "native":
            layer.append(Gate("rzz", (i, j), (theta,)))
        else:
            layer.extend(decompose_multi_rzz(2, theta, basis, qubits=(i, j)).gates)
    layer += [Gate("rx", (q,), (2 * (1 - g) * dt,)) for q in range(n)]
    return GateList(n, layer * nl)


def resource_report(params: ProposalCircuitParams, basis: str = "cnot") -> dict:
    nnz = int(np.count_nonzero(np.triu(params.J, 1)))
    one = trotter_circuit(params, basis, layers=1)
    return {
        "n": params.n,
        "layers": params.n_trot,
        "basis": basis,
        "one_qubit_gates": 2 * params.n * params.n_trot,
        "two_qubit_gates": 2 * nnz * params.n_trot,
        "rzz_per_layer": nnz,
        "depth_per_layer": one.depth(),
        "depth": trotter_circuit(params, basis).depth(),
        "compiled_one_qubit_gates": one.one_qubit_count * params.n_trot,
        "compiled_two_qubit_gates": one.two_qubit_count * params.n_trot,
    }


# ---------------------------------------------------------------------------
# emission


def _fmt(a: float) -> str:
    return f"{a:.12g}"


def emit_circuit(circuit, basis: str = "cnot", fmt: str = "text") -> str:
    """Deterministic listing of a GateList or of the Trotter circuit for params."""
    if isinstance(circuit, ProposalCircuitParams):
        circuit = trotter_circuit(circuit, basis)
    if fmt == "text":
        lines = [f"# circuit n={circuit.n} gates={len(circuit)}"]
        for g in circuit:
            parts = [g.name, ",".join(str(q) for q in g.qubits)]
            parts += [_fmt(a) for a in g.angles]
            lines.append(" ".join(parts))
    elif fmt == "qasm":
        lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{circuit.n}];"]
        for g in circuit:
            args = f"({','.join(_fmt(a) for a in g.angles)})" if g.angles else ""
            qs = ",".join(f"q[{q}]" for q in g.qubits)
            lines.append(f"{g.name}{args} {qs};")
    else:
        raise ConfigError(f"unsupported circuit format {fmt!r}")
    return "\n".join(lines) + "\n"


_QASM_LINE = re.compile(r"^(\w+)(?:\(([^)]*)\))?\s+(.+);$")


def parse_circuit(text: str) -> GateList:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigError("empty circuit listing")
    if lines[0].startswith("OPENQASM"):
        n = None
        gates = []
        for ln in lines[1:]:
            if ln.startswith("include"):
                continue
            if ln.startswith("qreg"):
                n = int(re.search(r"\[(\d+)\]", ln).group(1))
                continue
            m = _QASM_LINE.match(ln)
            if not m:
                raise ConfigError(f"cannot parse circuit line {ln!r}")
            angles = tuple(float(a) for a in m.group(2).split(",")) if m.group(2) else ()
            qs = tuple(int(q) for q in re.findall(r"q\[(\d+)\]", m.group(3)))
            gates.append(Gate(m.group(1), qs, angles))
        if n is None:
            raise ConfigError("missing qreg declaration")
        return GateList(n, gates)
    m = re.match(r"#\s*circuit n=(\d+)", lines[0])
    if not m:
        raise ConfigError("missing circuit header")
    gates = []
    for ln in lines[1:]:
        parts = ln.split()
        qs = tuple(int(q) for q in parts[1].split(","))
        gates.append(Gate(parts[0], qs, tuple(float(a) for a in parts[2:])))
    return GateList(int(m.group(1)), gates)
