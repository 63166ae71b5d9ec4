"""Searches for sets A in F_p with |A| >= k minimizing max(|A+A|, |A.A|).

Exhaustive search works in discrete-log coordinates. A dilation c = g^s acts
on A \\ {0} as a rotation by s of its dlog bit-vector and fixes 0, so
dilation orbits are necklaces. Only necklace representatives are scored.

Since A subset B implies A+A subset B+B and A.A subset B.B, the minimum over
|A| >= k is attained at |A| = k, and only k-sets are enumerated. The
witness is the optimal k-set with the smallest little-endian bit-vector
value, which is also the canonical (least) member of its dilation orbit.

Work is cut into deterministic chunks (by the zero flag and the second dlog
position); chunk results merge by minimum, so output does not depend on the
worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional

from .errors import InvariantViolation, ValidationError
from .groups import divisors, find_primitive_root, is_prime, make_group
from .setops import GSet, format_set_literal, parse_set_literal, product_set, sumset
from .sumprod import as_fraction, f_alpha

EXHAUSTIVE_LIMIT = 29
UNREDUCED_LIMIT = 17


@dataclass(frozen=True)
class SearchRecord:
    p: int
    min_card: int
    witness: GSet
    sum_size: int
    prod_size: int
    mode: str  # "exhaustive" | "structured"

    @property
    def ratio(self) -> Fraction:
        return Fraction(max(self.sum_size, self.prod_size), self.p)

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.min_card, self.p)

    @property
    def f_alpha_line(self) -> Fraction:
        return f_alpha(self.alpha).value if self.alpha < 1 else Fraction(1)

    @property
    def garaev_line(self) -> float:
        """(p |A|)^(1/2) / p with implied constant 1, at |A| = min_card."""
        return math.sqrt(self.p * self.min_card) / self.p

    @property
    def conjecture_line(self) -> float:
        """(2 p |A|)^(1/2) / p with the o(1) term dropped; advisory."""
        return math.sqrt(2 * self.p * self.min_card) / self.p

    def validate(self) -> "SearchRecord":
        W = self.witness
        if W.group.invariant_factors != (self.p,):
            raise InvariantViolation("witness lives in the wrong group")
        if W.card < self.min_card:
            raise InvariantViolation(f"witness has {W.card} < {self.min_card} elements")
        if sumset(W, W).card != self.sum_size:
            raise InvariantViolation("recorded |A+A| does not match the witness")
        if product_set(W, W).card != self.prod_size:
            raise InvariantViolation("recorded |A.A| does not match the witness")
        if self.mode not in ("exhaustive", "structured"):
            raise InvariantViolation(f"unknown mode {self.mode!r}")
        return self

    def to_record(self) -> dict:
        return {
            "type": "search",
            "p": self.p,
            "min_card": self.min_card,
            "witness": format_set_literal(self.witness),
            "card": self.witness.card,
            "sum_size": self.sum_size,
            "prod_size": self.prod_size,
            "ratio": str(self.ratio),
            "ratio_float": float(self.ratio),
            "mode": self.mode,
            "f_alpha_line": str(self.f_alpha_line),
            "garaev_line": self.garaev_line,
            "conjecture_line": self.conjecture_line,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)

    @classmethod
    def from_record(cls, rec: dict) -> "SearchRecord":
        W = parse_set_literal(rec["witness"])
        out = cls(int(rec["p"]), int(rec["min_card"]), W, int(rec["sum_size"]), int(rec["prod_size"]), rec["mode"])
        out.validate()
        if "ratio" in rec and as_fraction(rec["ratio"]) != out.ratio:
            raise InvariantViolation("recorded ratio does not match sizes")
        return out


def _record(p: int, min_card: int, mask: int, mode: str) -> SearchRecord:
    W = GSet(make_group([p]), mask)
    return SearchRecord(p, min_card, W, sumset(W, W).card, product_set(W, W).card, mode)


def _check_prime(p: int):
    if not (p > 2 and is_prime(p)):
        raise ValidationError(f"p={p} is not an odd prime")


# ---------------------------------------------------------------------------
# exhaustive


def _chunks(p: int, k: int) -> list[tuple[int, int, int, int]]:
    """(p, zero_flag, dlog_weight, second_position) work units; second
    position 0 means the weight-1 mask {0}, -1 means the empty mask."""
    n = p - 1
    out = []
    for z in (0, 1):
        w = k - z
        if w < 0 or w > n:
            continue
        if w == 0:
            out.append((p, z, 0, -1))
        elif w == 1:
            out.append((p, z, 1, 0))
        else:
            out.extend((p, z, w, j) for j in range(1, n - w + 2))
    return out


def _scan_chunk(unit) -> Optional[tuple[int, int]]:
    p, z, w, j = unit
    n = p - 1
    fulln = (1 << n) - 1
    fullp = (1 << p) - 1
    E = find_primitive_root(p).exp.tolist()
    bitE = [1 << e for e in E]
    if w == 0:
        return (1, 1)  # A = {0}
    if w == 1:
        heads = [((0,), ())]
    else:
        heads = [((0, j), rest) for rest in combinations(range(j + 1, n), w - 2)]
    best_v, best_m = p + 1, 0
    for head, rest in heads:
        pos = head + rest
        M = 0
        for e in pos:
            M |= 1 << e
        # necklace representative: no rotation bringing a set bit to 0 is smaller
        canon = True
        for e in pos[1:]:
            if ((M >> e) | (M << (n - e))) & fulln < M:
                canon = False
                break
        if not canon:
            continue
        prod = 0
        for e in pos:
            prod |= ((M << e) | (M >> (n - e))) & fulln
        psize = prod.bit_count() + z
        if psize > best_v:
            continue
        A = z
        for e in pos:
            A |= bitE[e]
        acc = 0
        for e in pos:
            a = E[e]
            acc |= ((A << a) | (A >> (p - a))) & fullp
        if z:
            acc |= A
        v = max(acc.bit_count(), psize)
        if v > best_v:
            continue
        # least member of the dilation orbit
        cm = None
        for s in range(n):
            m = z
            for e in pos:
                m |= bitE[(e + s) % n]
            if cm is None or m < cm:
                cm = m
        if v < best_v or cm < best_m:
            best_v, best_m = v, cm
    if best_v > p:
        return None
    return best_v, best_m


def _run(units, fn, workers: int):
    if workers <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, units, chunksize=max(1, len(units) // (4 * workers))))


def exhaustive_search(
    p: int, min_card: int, workers: int = 1, limit: int = EXHAUSTIVE_LIMIT, reduce: bool = True
) -> SearchRecord:
    """Exact min of max(|A+A|, |A.A|) over A in F_p with |A| >= min_card."""
    _check_prime(p)
    if p > limit:
        raise ValidationError(f"p={p} exceeds the exhaustive limit {limit}")
    if not 1 <= min_card <= p:
        raise ValidationError(f"min_card must lie in [1, {p}]")
    if not reduce:
        return _exhaustive_unreduced(p, min_card)
    results = [r for r in _run(_chunks(p, min_card), _scan_chunk, workers) if r is not None]
    v, m = min(results)
    rec = _record(p, min_card, m, "exhaustive")
    if max(rec.sum_size, rec.prod_size) != v:
        raise InvariantViolation("search kernel disagrees with set operations")
    return rec


def _exhaustive_unreduced(p: int, min_card: int) -> SearchRecord:
    """Every subset with |A| >= min_card, no symmetry reduction or card pruning.

    Ties break on (value, |A|, bit-vector), which selects the same witness as
    the reduced search.
    """
    if p > UNREDUCED_LIMIT:
        raise ValidationError(f"unreduced search is limited to p <= {UNREDUCED_LIMIT}")
    G = make_group([p])
    best = None
    for mask in range(1, 1 << p):
        c = mask.bit_count()
        if c < min_card:
            continue
        A = GSet(G, mask)
        v = max(sumset(A, A).card, product_set(A, A).card)
        key = (v, c, mask)
        if best is None or key < best:
            best = key
    return _record(p, min_card, best[2], "exhaustive")


# ---------------------------------------------------------------------------
# structured


def _scan_ell(unit) -> Optional[tuple[int, int]]:
    p, ell, k = unit
    exp = find_primitive_root(p).exp.tolist()
    n = p - 1
    size = n // ell
    if size < k:
        return None
    G = make_group([p])
    best = None
    for c in range(ell):
        coset = sorted(exp[c + ell * t] for t in range(size))
        # [1, N] cap cH with the least N reaching k elements; larger N only grows both sets
        mask = 0
        for x in coset[:k]:
            mask |= 1 << x
        A = GSet(G, mask)
        v = max(sumset(A, A).card, product_set(A, A).card)
        if best is None or (v, mask) < best:
            best = (v, mask)
    return best


def structured_search(p: int, min_card: int, workers: int = 1) -> SearchRecord:
    """Best d[1,N] cap cH over index-ell subgroups H, cosets cH and cutoffs N.

    Dilating by d maps [1,N] cap d^-1 cH onto d[1,N] cap cH without changing
    |A+A| or |A.A|, so running over all cosets covers every d. Gives an upper
    bound on the exhaustive minimum.
    """
    _check_prime(p)
    if not 1 <= min_card <= p - 1:
        raise ValidationError(f"min_card must lie in [1, {p - 1}] for the structured family")
    units = [(p, ell, min_card) for ell in divisors(p - 1)]
    results = [r for r in _run(units, _scan_ell, workers) if r is not None]
    v, m = min(results)
    return _record(p, min_card, m, "structured")


# ---------------------------------------------------------------------------
# advisory density margins


@dataclass(frozen=True)
class MarginRow:
    ell: int
    beta: Fraction
    density: Fraction
    bound: Fraction

    @property
    def margin(self) -> Fraction:
        return self.bound - self.density

    @property
    def consistent(self) -> bool:
        return self.margin >= 0


@dataclass(frozen=True)
class MarginReport:
    p: int
    eps: Fraction
    ratio: Fraction
    rows: list[MarginRow]
    advisory: bool = True  # the statement is asymptotic in p; small-p misses are data, not bugs


def theorem_main_margin(rec: SearchRecord, eps) -> MarginReport:
    """For each ell with ratio + eps < 1/ell, compare |A|/p with beta / (2(ell+1)),
    beta = ratio + eps."""
    eps = as_fraction(eps)
    beta = rec.ratio + eps
    density = Fraction(rec.witness.card, rec.p)
    rows = []
    ell = 1
    while beta < Fraction(1, ell):
        rows.append(MarginRow(ell, beta, density, beta / (2 * (ell + 1))))
        ell += 1
    return MarginReport(rec.p, eps, rec.ratio, rows)
