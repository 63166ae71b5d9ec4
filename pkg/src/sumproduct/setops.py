"""Subsets of a finite abelian group stored as bit-vectors.

A ``GSet`` keeps its members in a Python int used as a little-endian bit
vector (bit ``i`` set iff element ``i`` is present). On cyclic groups a
translate is a rotation of that int, so a sumset is an OR of rotations over
the smaller operand; Python's big ints do the word blocking. Other groups
translate through numpy index arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable

import numpy as np

from .errors import InvariantViolation, ValidationError
from .groups import GroupSpec, find_primitive_root, is_prime, make_group


@dataclass(frozen=True)
class GSet:
    group: GroupSpec
    mask: int

    def __post_init__(self):
        if self.mask < 0 or self.mask >> self.group.order:
            raise ValidationError("mask has bits outside the group")

    @classmethod
    def from_elements(cls, group: GroupSpec, elements: Iterable[int]) -> "GSet":
        m = 0
        for x in elements:
            x = int(x)
            if not 0 <= x < group.order:
                raise ValidationError(f"element {x} outside group of order {group.order}")
            m |= 1 << x
        return cls(group, m)

    @classmethod
    def from_bits(cls, group: GroupSpec, bits) -> "GSet":
        bits = np.asarray(bits, dtype=bool)
        if bits.shape != (group.order,):
            raise ValidationError("bit vector length does not match group order")
        return cls(group, _int_from_bits(bits))

    @classmethod
    def full(cls, group: GroupSpec) -> "GSet":
        return cls(group, (1 << group.order) - 1)

    @classmethod
    def empty(cls, group: GroupSpec) -> "GSet":
        return cls(group, 0)

    @property
    def card(self) -> int:
        return self.mask.bit_count()

    def __len__(self):
        return self.card

    def __contains__(self, x) -> bool:
        return bool(self.mask >> int(x) & 1)

    def __iter__(self):
        return iter(self.elements())

    @cached_property
    def bits(self) -> np.ndarray:
        out = _bits_from_int(self.mask, self.group.order)
        out.setflags(write=False)
        return out

    def elements(self) -> list[int]:
        return np.flatnonzero(self.bits).tolist()

    def indicator(self) -> np.ndarray:
        return self.bits.astype(np.float64)

    def _check(self, other: "GSet"):
        if self.group != other.group:
            raise ValidationError(
                f"group mismatch: {self.group.invariant_factors} vs {other.group.invariant_factors}"
            )

    def __or__(self, other):
        self._check(other)
        return GSet(self.group, self.mask | other.mask)

    def __and__(self, other):
        self._check(other)
        return GSet(self.group, self.mask & other.mask)

    def __sub__(self, other):
        self._check(other)
        return GSet(self.group, self.mask & ~other.mask)

    def complement(self) -> "GSet":
        return GSet(self.group, ((1 << self.group.order) - 1) ^ self.mask)

    def issubset(self, other: "GSet") -> bool:
        self._check(other)
        return self.mask & ~other.mask == 0


def _int_from_bits(bits: np.ndarray) -> int:
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _bits_from_int(mask: int, n: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def rotl(mask: int, k: int, n: int, full: int) -> int:
    """Rotate an n-bit mask left by k (translate by +k in Z/n)."""
    k %= n
    return ((mask << k) | (mask >> (n - k))) & full


_TABLE_MAX_ORDER = 64


@lru_cache(maxsize=None)
def _translation_tables(G: GroupSpec) -> tuple:
    """tables[h][j][b]: image under +h of byte value b sitting in byte j."""
    n = G.order
    nbytes = (n + 7) // 8
    out = []
    for h in range(n):
        img = [int(y) for y in G.add(np.arange(n), h)]
        per_byte = []
        for j in range(nbytes):
            row = [0] * 256
            for b in range(1, 256):
                m = 0
                for i in range(8):
                    x = 8 * j + i
                    if b >> i & 1 and x < n:
                        m |= 1 << img[x]
                row[b] = m
            per_byte.append(tuple(row))
        out.append(tuple(per_byte))
    return tuple(out)


def _shift_mask(G: GroupSpec, mask: int, h: int) -> int:
    """Bit-vector of (set) + h."""
    n = G.order
    if G.rank == 1:
        return rotl(mask, h, n, (1 << n) - 1)
    if n <= _TABLE_MAX_ORDER:
        tab = _translation_tables(G)[h]
        out = 0
        j = 0
        while mask:
            b = mask & 0xFF
            if b:
                out |= tab[j][b]
            mask >>= 8
            j += 1
        return out
    src = G.sub(np.arange(n), h)  # new[x] = old[x - h]
    return _int_from_bits(_bits_from_int(mask, n)[src])


def translate(A: GSet, h: int) -> GSet:
    return GSet(A.group, _shift_mask(A.group, A.mask, A.group.index_of(h)))


def sumset(A: GSet, B: GSet) -> GSet:
    """{a + b : a in A, b in B}."""
    A._check(B)
    if A.card > B.card:
        A, B = B, A
    G = A.group
    if A.card == 0:
        return GSet.empty(G)
    n = G.order
    full = (1 << n) - 1
    m, acc = B.mask, 0
    if G.rank == 1:
        for a in A.elements():
            acc |= ((m << a) | (m >> (n - a))) & full
            if acc == full:
                break
        return GSet(G, acc)
    if n <= _TABLE_MAX_ORDER:
        for a in A.elements():
            acc |= _shift_mask(G, m, a)
        return GSet(G, acc)
    idx = np.arange(n)
    bits = np.zeros(n, dtype=bool)
    bbits = B.bits
    for a in A.elements():
        bits |= bbits[G.sub(idx, a)]
    return GSet.from_bits(G, bits)


def sumset_reference(A: GSet, B: GSet) -> GSet:
    """Quadratic double loop over pairs; oracle for ``sumset``."""
    A._check(B)
    G = A.group
    bs = np.array(B.elements(), dtype=np.int64)
    bits = np.zeros(G.order, dtype=bool)
    if bs.size:
        for a in A.elements():
            bits[G.add(np.full_like(bs, a), bs)] = True
    return GSet.from_bits(G, bits)


@lru_cache(maxsize=64)
def _exp_list(p: int) -> tuple[int, ...]:
    return tuple(find_primitive_root(p).exp.tolist())


def _require_prime_field(A: GSet) -> int:
    G = A.group
    if not (G.rank == 1 and G.order > 2 and is_prime(G.order)):
        raise ValidationError(
            f"product sets need F_p with multiplicative structure; got group {G.invariant_factors}"
        )
    return G.order


def dlog_mask(A: GSet) -> int:
    """Members of A \\ {0} as a bit-vector in discrete-log coordinates on [p-1]."""
    p = _require_prime_field(A)
    dl = find_primitive_root(p).dlog
    m = 0
    for x in A.elements():
        if x:
            m |= 1 << int(dl[x])
    return m


def from_dlog_mask(p: int, m: int, with_zero: bool = False) -> GSet:
    exp = _exp_list(p)
    out = 1 if with_zero else 0
    k = 0
    while m:
        if m & 1:
            out |= 1 << exp[k]
        m >>= 1
        k += 1
    return GSet(GroupSpec((p,)), out)


def product_set(A: GSet, B: GSet) -> GSet:
    """{a * b : a in A, b in B} in F_p, computed as a sumset in dlog coordinates."""
    A._check(B)
    p = _require_prime_field(A)
    n = p - 1
    full = (1 << n) - 1
    ma, mb = dlog_mask(A), dlog_mask(B)
    if ma.bit_count() > mb.bit_count():
        ma, mb = mb, ma
    acc = 0
    k = 0
    while ma:
        if ma & 1:
            acc |= rotl(mb, k, n, full)
        ma >>= 1
        k += 1
    zero = (0 in A and B.card > 0) or (0 in B and A.card > 0)
    return from_dlog_mask(p, acc, with_zero=zero)


def product_set_reference(A: GSet, B: GSet) -> GSet:
    p = _require_prime_field(A)
    return GSet.from_elements(A.group, {a * b % p for a in A.elements() for b in B.elements()})


def rep_count(A: GSet, x) -> int:
    """|A cap (x - A)| = #{(a, b) in A^2 : a + b = x}."""
    G = A.group
    x = G.index_of(x)
    el = np.array(A.elements(), dtype=np.int64)
    if el.size == 0:
        return 0
    return int(A.bits[G.sub(x, el)].sum())


def rep_counts(A: GSet) -> np.ndarray:
    """Representation counts of every x, via the group FFT (rounded; exact at these sizes)."""
    G = A.group
    grid = A.indicator().reshape(G.shape)
    F = np.fft.fftn(grid)
    r = np.fft.ifftn(F * F).real.reshape(-1)
    return np.rint(r).astype(np.int64)


def popular_sums(A: GSet, eps) -> GSet:
    """S_eps(A) = {x : rep_count(A, x) >= eps |G|}, compared in exact rationals."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValidationError("eps must be positive")
    counts = rep_counts(A)
    # object dtype keeps the cross-multiplication exact for any denominator
    keep = (counts.astype(object) * eps.denominator >= eps.numerator * A.group.order).astype(bool)
    return GSet.from_bits(A.group, keep)


def dilate(A: GSet, c: int) -> GSet:
    p = _require_prime_field(A)
    c = int(c) % p
    if c == 0:
        raise ValidationError("dilation by 0 is not allowed")
    return GSet.from_elements(A.group, (c * a % p for a in A.elements()))


def kneser_stabilizer(S: GSet) -> GSet:
    """H = {h : S + h = S}, checked to be a subgroup."""
    if S.card == 0:
        raise ValidationError("stabilizer of the empty set is undefined here")
    G = S.group
    H = GSet.from_elements(G, (h for h in range(G.order) if _shift_mask(G, S.mask, h) == S.mask))
    if 0 not in H or sumset(H, H) != H:
        raise InvariantViolation("stabilizer is not a subgroup")
    return H


@dataclass(frozen=True)
class KneserReport:
    lhs: int
    rhs: int
    stabilizer: GSet
    sum_plus_h: int

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs


def kneser_check(A: GSet) -> KneserReport:
    """|A+A| >= 2|A+H| - |H| with H the stabilizer of A+A."""
    if A.card == 0:
        raise ValidationError("Kneser check needs a nonempty set")
    S = sumset(A, A)
    H = kneser_stabilizer(S)
    ah = sumset(A, H).card
    rep = KneserReport(lhs=S.card, rhs=2 * ah - H.card, stabilizer=H, sum_plus_h=ah)
    if not rep.holds:
        raise InvariantViolation(f"Kneser inequality fails: {rep.lhs} < {rep.rhs}")
    return rep


def lemma_kneser_bound(A: GSet, ell: int, sum_card: int | None = None) -> bool:
    """If |A| > |G|/(ell+1) then |A+A| >= |G|/ell; vacuously true otherwise.

    ``sum_card`` may pass a precomputed |A+A|.
    """
    if ell < 1:
        raise ValidationError("ell must be a positive integer")
    n = A.group.order
    if A.card * (ell + 1) <= n:
        return True
    if sum_card is None:
        sum_card = sumset(A, A).card
    return sum_card * ell >= n


def cauchy_davenport_holds(A: GSet) -> bool:
    p = A.group.order
    if A.card == 0:
        return True
    return sumset(A, A).card >= min(p, 2 * A.card - 1)


# ---------------------------------------------------------------------------
# set literal format
#
#   p=<prime>;elems=<comma-separated residues>
#   p=<prime>;hexbits=<hex bytes, little-endian>
#   G=<n1>x<n2>x...;elems=...        (general groups)

_LIT = re.compile(r"^\s*(p|G)\s*=\s*([0-9x]+)\s*;\s*(elems|hexbits)\s*=\s*([0-9a-fA-F,\s]*)\s*$")


def parse_set_literal(line: str) -> GSet:
    m = _LIT.match(line)
    if not m:
        raise ValidationError(f"cannot parse set literal: {line!r}")
    key, gval, kind, body = m.groups()
    if key == "p":
        p = int(gval)
        if not is_prime(p):
            raise ValidationError(f"p={p} is not prime")
        G = make_group([p])
    else:
        G = make_group([int(t) for t in gval.split("x")])
    if kind == "elems":
        items = [t.strip() for t in body.split(",") if t.strip()]
        try:
            return GSet.from_elements(G, (int(t) for t in items))
        except ValueError as exc:
            raise ValidationError(str(exc)) from None
    body = body.strip()
    try:
        raw = bytes.fromhex(body) if body else b""
    except ValueError as exc:
        raise ValidationError(f"bad hexbits: {exc}") from None
    return GSet(G, int.from_bytes(raw, "little"))


def hexbits(A: GSet) -> str:
    return A.mask.to_bytes((A.group.order + 7) // 8, "little").hex()


def format_set_literal(A: GSet, style: str = "auto") -> str:
    G = A.group
    head = f"p={G.order}" if G.rank == 1 and is_prime(G.order) else "G=" + "x".join(map(str, G.invariant_factors))
    if style == "auto":
        style = "elems" if A.card <= 64 else "hexbits"
    if style == "elems":
        return f"{head};elems=" + ",".join(map(str, A.elements()))
    if style == "hexbits":
        return f"{head};hexbits={hexbits(A)}"
    raise ValidationError(f"unknown set literal style {style!r}")
