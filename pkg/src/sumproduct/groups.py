"""Finite abelian groups in invariant-factor form, their characters, and the
multiplicative structure of F_p.

Indexing convention: the group Z/n1 x ... x Z/nk is stored mixed-radix,
little-endian on the factor list, so element ``i`` has coordinates
``(i % n1, (i // n1) % n2, ...)``. Characters use the same convention:
character ``r`` with coordinates ``(r1, ..., rk)`` sends ``x`` to
``sum(ri * xi / ni) mod 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .errors import ValidationError

MAX_ORDER = 2**20
MAX_PRIME = 2**20


@dataclass(frozen=True)
class GroupSpec:
    invariant_factors: tuple[int, ...]
    order: int = field(init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "invariant_factors", tuple(int(n) for n in self.invariant_factors))
        object.__setattr__(self, "order", math.prod(self.invariant_factors))

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def is_cyclic_prime(self) -> bool:
        return self.rank == 1 and is_prime(self.order)

    @cached_property
    def strides(self) -> np.ndarray:
        s = [1]
        for n in self.invariant_factors[:-1]:
            s.append(s[-1] * n)
        return np.array(s, dtype=np.int64)

    @cached_property
    def coords(self) -> np.ndarray:
        """(order, rank) array of coordinates of every element index."""
        idx = np.arange(self.order, dtype=np.int64)
        out = np.empty((self.order, self.rank), dtype=np.int64)
        for i, n in enumerate(self.invariant_factors):
            out[:, i] = idx % n
            idx = idx // n
        out.setflags(write=False)
        return out

    @cached_property
    def shape(self) -> tuple[int, ...]:
        """Array shape under which a flat value vector reshapes to the grid
        (C order, so the first invariant factor is the last axis)."""
        return tuple(reversed(self.invariant_factors))

    @cached_property
    def exponent(self) -> int:
        return math.lcm(*self.invariant_factors)

    def decode(self, index: int) -> tuple[int, ...]:
        self._check_index(index)
        out = []
        for n in self.invariant_factors:
            out.append(index % n)
            index //= n
        return tuple(out)

    def encode(self, coords: Sequence[int]) -> int:
        if len(coords) != self.rank:
            raise ValidationError(f"expected {self.rank} coordinates, got {len(coords)}")
        index = 0
        for c, n, s in zip(coords, self.invariant_factors, self.strides):
            index += (int(c) % n) * int(s)
        return index

    def index_of(self, x) -> int:
        """Accept an element index or a coordinate tuple."""
        if isinstance(x, (tuple, list)):
            return self.encode(x)
        x = int(x)
        self._check_index(x)
        return x

    def _check_index(self, index: int):
        if not 0 <= index < self.order:
            raise ValidationError(f"index {index} out of range for group of order {self.order}")

    def encode_array(self, coords: np.ndarray) -> np.ndarray:
        n = np.array(self.invariant_factors, dtype=np.int64)
        return (np.mod(coords, n) * self.strides).sum(axis=-1)

    def add(self, x, y):
        """Group addition on indices; works elementwise on integer arrays."""
        x = np.asarray(x)
        y = np.asarray(y)
        out = self.encode_array(self.coords[x] + self.coords[y])
        return int(out) if out.ndim == 0 else out

    def neg(self, x):
        x = np.asarray(x)
        out = self.encode_array(-self.coords[x])
        return int(out) if out.ndim == 0 else out

    def sub(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        out = self.encode_array(self.coords[x] - self.coords[y])
        return int(out) if out.ndim == 0 else out

    def character_numerators(self, gamma) -> np.ndarray:
        """Integer phases u(x) in [0, exponent) with char_phase = u / exponent."""
        r = np.array(self.decode(self.index_of(gamma)), dtype=np.int64)
        L = self.exponent
        weights = np.array([L // n for n in self.invariant_factors], dtype=np.int64)
        return (self.coords * (r * weights)).sum(axis=1) % L

    def character_order(self, gamma) -> int:
        r = self.decode(self.index_of(gamma))
        return math.lcm(*(n // math.gcd(n, ri) for n, ri in zip(self.invariant_factors, r)))

    def character_phase_classes(self, gamma) -> tuple[np.ndarray, int]:
        """Phase of every element as ``k / m`` with ``m`` the character order.

        Returns ``(k, m)`` with ``k`` an integer array in ``[0, m)``.
        """
        m = self.character_order(gamma)
        u = self.character_numerators(gamma)
        return u // (self.exponent // m), m


def make_group(invariant_factors: Sequence[int], max_order: int = MAX_ORDER) -> GroupSpec:
    factors = tuple(int(n) for n in invariant_factors)
    if not factors:
        raise ValidationError("need at least one invariant factor")
    if any(n < 2 for n in factors):
        raise ValidationError(f"every invariant factor must be >= 2, got {factors}")
    if math.prod(factors) > max_order:
        raise ValidationError(f"group order {math.prod(factors)} exceeds maximum {max_order}")
    return GroupSpec(factors)


def char_phase_exact(G: GroupSpec, gamma, x) -> Fraction:
    r = G.decode(G.index_of(gamma))
    xs = G.decode(G.index_of(x))
    return sum((Fraction(ri * xi, n) for ri, xi, n in zip(r, xs, G.invariant_factors)), Fraction(0)) % 1


def char_phase(G: GroupSpec, gamma, x) -> float:
    """gamma(x) as a real number in [0, 1)."""
    return float(char_phase_exact(G, gamma, x))


# ---------------------------------------------------------------------------
# primes and the multiplicative group


_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; exact for n < 3.3e24."""
    n = int(n)
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    q = 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


@dataclass(frozen=True, eq=False)
class MulStructure:
    """F_p^x viewed as the cyclic group [p-1] through a primitive root.

    ``dlog[x]`` is the exponent of ``x`` (``dlog[0] == -1``) and
    ``exp[k] == g**k mod p``.
    """

    p: int
    primitive_root: int
    dlog: np.ndarray
    exp: np.ndarray

    @property
    def group(self) -> GroupSpec:
        return GroupSpec((self.p - 1,))

    def log(self, x: int) -> int:
        x = int(x) % self.p
        if x == 0:
            raise ValidationError("0 has no discrete logarithm")
        return int(self.dlog[x])

    def power(self, k: int) -> int:
        return int(self.exp[int(k) % (self.p - 1)])


@lru_cache(maxsize=None)
def find_primitive_root(p: int, max_p: int = MAX_PRIME) -> MulStructure:
    """Smallest primitive root of the odd prime ``p`` with full log/exp tables."""
    p = int(p)
    if p > max_p:
        raise ValidationError(f"p={p} exceeds the configured maximum {max_p}")
    if p < 3 or not is_prime(p):
        raise ValidationError(f"p={p} is not an odd prime")
    qs = prime_factors(p - 1)
    g = next(g for g in range(2, p) if all(pow(g, (p - 1) // q, p) != 1 for q in qs))
    exp = np.empty(p - 1, dtype=np.int64)
    v = 1
    for k in range(p - 1):
        exp[k] = v
        v = v * g % p
    dlog = np.full(p, -1, dtype=np.int64)
    dlog[exp] = np.arange(p - 1, dtype=np.int64)
    exp.setflags(write=False)
    dlog.setflags(write=False)
    return MulStructure(p, g, dlog, exp)


def mul_subgroup(p: int, ell: int):
    """The index-``ell`` subgroup {x : dlog(x) = 0 mod ell} of F_p^x, as a GSet on [p]."""
    from .setops import GSet

    ms = find_primitive_root(p)
    if ell < 1 or (p - 1) % ell:
        raise ValidationError(f"ell={ell} does not divide p-1={p - 1}")
    return GSet.from_elements(GroupSpec((p,)), ms.exp[::ell].tolist())
