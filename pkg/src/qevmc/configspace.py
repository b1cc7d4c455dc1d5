"""Spin configurations, their integer indices and the monomial basis.

Spins are stored as int8 vectors with entries in {-1, +1}. Spin -1 maps to
bit 0 and site i is bit i of the index (little-endian), so
``index = sum_i bit_i * 2**i``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .exceptions import ConfigError

MINUS_CHARS = ("-", "−")


def as_config(v: Sequence[int]) -> np.ndarray:
    """Validate and convert to an int8 spin vector."""
    arr = np.asarray(v)
    if arr.ndim != 1 or arr.size == 0:
        raise ConfigError("configuration must be a non-empty 1-d sequence")
    if not np.all((arr == 1) | (arr == -1)):
        raise ConfigError("configuration entries must be -1 or +1")
    return arr.astype(np.int8)


def config_to_index(v: Sequence[int]) -> int:
    v = as_config(v)
    bits = (v > 0).astype(np.int64)
    return int(np.dot(bits, 1 << np.arange(v.size, dtype=np.int64)))


def index_to_config(index: int, n: int) -> np.ndarray:
    if n < 1:
        raise ConfigError("n must be >= 1")
    if not 0 <= index < (1 << n):
        raise ConfigError(f"index {index} out of range for n={n}")
    bits = (int(index) >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def all_configs(n: int) -> np.ndarray:
    """All 2**n configurations as a (2**n, n) int8 array, row k has index k."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    idx = np.arange(1 << n, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def configs_to_indices(vs: np.ndarray) -> np.ndarray:
    """Vectorized config_to_index over the rows of a 2-d array."""
    vs = np.asarray(vs)
    bits = (vs > 0).astype(np.int64)
    return bits @ (1 << np.arange(vs.shape[1], dtype=np.int64))


def indices_to_configs(idx: Iterable[int], n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)[:, None]
    bits = (idx >> np.arange(n)) & 1
    return (2 * bits - 1).astype(np.int8)


def config_to_string(v: Sequence[int]) -> str:
    return "".join("+" if s > 0 else "-" for s in as_config(v))


def parse_config(text: Union[str, int], n: int | None = None) -> np.ndarray:
    """Parse a '+'/'-' string or an integer index (needs n)."""
    if isinstance(text, (int, np.integer)):
        if n is None:
            raise ConfigError("n is required to decode an integer index")
        return index_to_config(int(text), n)
    s = text.strip()
    if s.isdigit():
        if n is None:
            raise ConfigError("n is required to decode an integer index")
        return index_to_config(int(s), n)
    out = []
    for ch in s:
        if ch == "+":
            out.append(1)
        elif ch in MINUS_CHARS:
            out.append(-1)
        else:
            raise ConfigError(f"invalid spin character {ch!r}")
    if n is not None and len(out) != n:
        raise ConfigError(f"expected {n} spins, got {len(out)}")
    return as_config(out)


@dataclass(frozen=True)
class Multidex:
    """Binary multi-index selecting the sites of a monomial."""

    bits: tuple

    def __post_init__(self):
        b = tuple(int(x) for x in self.bits)
        if any(x not in (0, 1) for x in b):
            raise ConfigError("multidex entries must be 0 or 1")
        object.__setattr__(self, "bits", b)

    @property
    def n(self) -> int:
        return len(self.bits)

    @property
    def hamming_weight(self) -> int:
        return sum(self.bits)

    @property
    def sites(self) -> tuple:
        return tuple(i for i, b in enumerate(self.bits) if b)

    @classmethod
    def from_sites(cls, sites: Iterable[int], n: int) -> "Multidex":
        bits = [0] * n
        for i in sites:
            bits[i] = 1
        return cls(tuple(bits))

    @classmethod
    def from_index(cls, mask: int, n: int) -> "Multidex":
        return cls(tuple((mask >> i) & 1 for i in range(n)))

    def to_index(self) -> int:
        return sum(b << i for i, b in enumerate(self.bits))


def monomial(a: Multidex, v: Sequence[int]) -> int:
    """F_a(v) = prod_i v_i**a_i; the empty product is +1."""
    v = as_config(v)
    if a.n != v.size:
        raise ConfigError(f"multidex length {a.n} != configuration length {v.size}")
    out = 1
    for i in a.sites:
        out *= int(v[i])
    return out


def monomial_table(n: int) -> np.ndarray:
    """Matrix F[v, a] = F_a(v) over all configs and all masks, as int8.

    Row and column orders are the integer index of the config and the
    integer mask of the multidex.
    """
    masks = np.arange(1 << n, dtype=np.int64)
    idx = np.arange(1 << n, dtype=np.int64)
    # v_i = -1 exactly where bit i is 0, so F_a(v) = (-1)^popcount(a & ~v)
    neg = (~idx[:, None]) & masks[None, :]
    parity = np.zeros(neg.shape, dtype=np.int64)
    for i in range(n):
        parity ^= (neg >> i) & 1
    return (1 - 2 * parity).astype(np.int8)


def monomial_inner_product(a: Multidex, b: Multidex, n: int) -> float:
    """2^-n sum_v F_a(v) F_b(v), computed exactly in integer arithmetic."""
    if a.n != n or b.n != n:
        raise ConfigError("multidex lengths must equal n")
    # F_a F_b = F_{a xor b}; the sum over v vanishes unless the xor is empty
    diff = a.to_index() ^ b.to_index()
    ones = (~np.arange(1 << n, dtype=np.int64)) & diff
    parity = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        parity ^= (ones >> i) & 1
    total = int(np.sum(1 - 2 * parity))
    return total / (1 << n)
