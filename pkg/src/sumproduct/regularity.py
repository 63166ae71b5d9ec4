"""Factors, conditional expectation onto a factor, and the U^2 energy-increment
decomposition, plus the structure-of-sumsets pipeline built on it.

A factor is a partition of the group into cells. ``project`` replaces a
function by its cell averages. ``weak_regularity`` starts from the one-cell
factor and keeps refining by arc level sets {x : gamma(x) in [t, t+ell]} of
the largest Fourier coefficient of the residual until the residual has
U^2 norm at most delta. Each refinement is required to raise the energy
||f_B||_2^2 by at least ``c0 * delta**8``, so the loop stops within
ceil(1 / (c0 * delta**8)) steps for 1-bounded input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConstantFloorError, InvariantViolation, IterationCapExceeded, ValidationError
from .groups import GroupSpec, make_group
from .setops import GSet, popular_sums, sumset
from .spectral import (
    BOUNDED_TOL,
    GridFunction,
    Spectrum,
    character,
    fourier,
    inverse_fourier,
    u2_norm,
)

ARC_TOL = 1e-9  # slack, in units of one phase step, on the closed arc endpoints


@dataclass(frozen=True)
class RegularityConfig:
    c0: float = 1 / 64  # energy-increment floor, as a multiple of delta**8
    c1: float = 1 / 8  # correlation floor, as a multiple of delta**4
    arc_c: float = 1 / (4 * math.pi)  # arc length ell = arc_c * delta**2
    max_iterations: int | None = None  # default: ceil(1 / (c0 * delta**8))

    def __post_init__(self):
        if min(self.c0, self.c1, self.arc_c) <= 0:
            raise ValidationError("regularity constants must be positive")

    def iteration_cap(self, delta: float) -> int:
        cap = math.ceil(1 / (self.c0 * delta**8))
        return cap if self.max_iterations is None else min(cap, self.max_iterations)


@dataclass(frozen=True, eq=False)
class Factor:
    group: GroupSpec
    cell_of: np.ndarray
    m: int = field(init=False)
    cell_sizes: np.ndarray = field(init=False)

    def __post_init__(self):
        labels = np.asarray(self.cell_of, dtype=np.int64).reshape(-1)
        if labels.shape[0] != self.group.order:
            raise ValidationError("cell assignment length does not match group order")
        _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
        # compact ids in order of first appearance, so labels are canonical
        rank = np.empty_like(first)
        rank[np.argsort(first, kind="stable")] = np.arange(first.size)
        compact = rank[inv].reshape(-1)
        compact.setflags(write=False)
        sizes = np.bincount(compact, minlength=first.size)
        sizes.setflags(write=False)
        object.__setattr__(self, "cell_of", compact)
        object.__setattr__(self, "m", int(first.size))
        object.__setattr__(self, "cell_sizes", sizes)

    @classmethod
    def trivial(cls, group: GroupSpec) -> "Factor":
        return cls(group, np.zeros(group.order, dtype=np.int64))

    @classmethod
    def singletons(cls, group: GroupSpec) -> "Factor":
        return cls(group, np.arange(group.order))

    def cells(self) -> list[GSet]:
        return [GSet.from_bits(self.group, self.cell_of == c) for c in range(self.m)]

    def __eq__(self, other):
        return (
            isinstance(other, Factor)
            and self.group == other.group
            and np.array_equal(self.cell_of, other.cell_of)
        )

    __hash__ = None


def _check_group(a, b):
    if a.group != b.group:
        raise ValidationError("group mismatch")


def cell_means(f: GridFunction, B: Factor) -> np.ndarray:
    _check_group(f, B)
    re = np.bincount(B.cell_of, weights=f.values.real, minlength=B.m)
    im = np.bincount(B.cell_of, weights=f.values.imag, minlength=B.m)
    return (re + 1j * im) / B.cell_sizes


def project(f: GridFunction, B: Factor) -> GridFunction:
    """f_B(x) = average of f over the cell of B containing x."""
    return GridFunction(f.group, cell_means(f, B)[B.cell_of])


def energy(f: GridFunction, B: Factor) -> float:
    """||f_B||_2^2, summed cellwise to avoid building f_B."""
    means = cell_means(f, B)
    return float(np.sum(B.cell_sizes * np.abs(means) ** 2) / f.group.order)


def refine_by_set(B: Factor, E: GSet) -> Factor:
    """Cells B cap E and B cap E^c for every cell B; empty pieces dropped."""
    _check_group(B, E)
    return Factor(B.group, B.cell_of * 2 + E.bits.astype(np.int64))


def refines(finer: Factor, coarser: Factor) -> bool:
    _check_group(finer, coarser)
    parent = np.full(finer.m, -1, dtype=np.int64)
    parent[finer.cell_of] = coarser.cell_of
    return bool(np.array_equal(parent[finer.cell_of], coarser.cell_of))


def pythagoras_gap(f: GridFunction, B: Factor, B_fine: Factor) -> tuple[float, float]:
    """(||f_B'||^2 - ||f_B||^2, ||f_B' - f_B||^2) for B' refining B."""
    if not refines(B_fine, B):
        raise ValidationError("second factor does not refine the first")
    fb, fbb = project(f, B), project(f, B_fine)
    lhs = float(np.mean(np.abs(fbb.values) ** 2) - np.mean(np.abs(fb.values) ** 2))
    rhs = float(np.mean(np.abs(fbb.values - fb.values) ** 2))
    return lhs, rhs


# ---------------------------------------------------------------------------
# U^2 inverse step


def _check_bounded(f: GridFunction):
    if np.abs(f.values).max(initial=0.0) > 1 + BOUNDED_TOL:
        raise ValidationError("function is not 1-bounded")


def largest_coefficient(S: Spectrum) -> int:
    """Index of the largest |coefficient|; near-ties go to the smallest index."""
    a = np.abs(S.coeffs)
    top = a.max(initial=0.0)
    return int(np.flatnonzero(a >= top - 1e-12 * max(1.0, top))[0])


def find_large_character(g: GridFunction, delta: float) -> int:
    """A character with |ghat(gamma)| >= delta^2, given ||g||_{U^2} >= delta."""
    _check_bounded(g)
    S = fourier(g)
    u2 = float(np.sum(np.abs(S.coeffs) ** 4) ** 0.25)
    if u2 < delta:
        raise ValidationError(f"U^2 norm {u2:.6g} is below delta={delta}")
    return largest_coefficient(S)


def _arc_runs(t, ell: float, m: int):
    """Phase classes k/m lying in the closed arc [t, t+ell] (mod 1), as
    cyclic runs: returns (start, length) arrays, length clipped to [0, m]."""
    t = np.asarray(t, dtype=np.float64)
    lo = np.ceil(t * m - ARC_TOL).astype(np.int64)
    hi = np.floor((t + ell) * m + ARC_TOL).astype(np.int64)
    length = np.clip(hi - lo + 1, 0, m)
    return np.mod(lo, m), length


def level_set(G: GroupSpec, gamma, t: float, ell: float) -> GSet:
    """E_t = {x : gamma(x) in [t, t+ell] mod 1}."""
    if not 0 < ell < 1:
        raise ValidationError("arc length must lie in (0, 1)")
    k, m = G.character_phase_classes(gamma)
    start, length = _arc_runs(float(t) % 1.0, ell, m)
    return GSet.from_bits(G, np.mod(k - int(start), m) < int(length))


def _candidate_offsets(m: int, ell: float) -> np.ndarray:
    """Offsets t at which every distinct arc level set is realized: the
    breakpoints k/m and k/m - ell and the midpoints between them."""
    k = np.arange(m) / m
    b = np.unique(np.mod(np.concatenate([k, k - ell]), 1.0))
    nxt = np.append(b[1:], b[0] + 1.0)
    mids = np.mod((b + nxt) / 2, 1.0)
    return np.unique(np.concatenate([b, mids]))


@dataclass(frozen=True)
class StepRecord:
    gamma: int
    t: float
    ell: float
    correlation: float
    energy_before: float
    energy_after: float


def best_level_set(g: GridFunction, gamma: int, ell: float) -> tuple[GSet, float, float]:
    """Arc level set of ``gamma`` maximizing |<g, 1_E>| over all offsets t.

    Returns (E, t, |<g, 1_E>|). Ties go to the smallest t.
    """
    G = g.group
    k, m = G.character_phase_classes(gamma)
    hist = np.bincount(k, weights=g.values.real, minlength=m) + 1j * np.bincount(
        k, weights=g.values.imag, minlength=m
    )
    prefix = np.concatenate([[0], np.cumsum(np.concatenate([hist, hist]))])
    ts = _candidate_offsets(m, ell)
    start, length = _arc_runs(ts, ell, m)
    sums = np.abs(prefix[start + length] - prefix[start]) / G.order
    top = sums.max()
    j = int(np.flatnonzero(sums >= top - 1e-15)[0])
    E = level_set(G, gamma, ts[j], ell)
    corr = abs(np.sum(g.values[E.bits])) / G.order
    return E, float(ts[j]), float(corr)


def _energy_step(f: GridFunction, B: Factor, delta: float, cfg: RegularityConfig, trace=None):
    fb = project(f, B)
    g = f - fb
    u2 = u2_norm(g)
    if u2 <= delta:
        raise ValidationError(f"residual U^2 norm {u2:.6g} is already <= delta={delta}")
    gamma = largest_coefficient(fourier(g))
    ell = cfg.arc_c * delta**2
    E, t, corr = best_level_set(g, gamma, ell)
    if corr < cfg.c1 * delta**4:
        raise ConstantFloorError(
            f"best level-set correlation {corr:.3e} below c1*delta^4={cfg.c1 * delta**4:.3e}", trace
        )
    B2 = refine_by_set(B, E)
    e0, e1 = energy(f, B), energy(f, B2)
    if e1 - e0 < cfg.c0 * delta**8:
        raise ConstantFloorError(
            f"energy gain {e1 - e0:.3e} below c0*delta^8={cfg.c0 * delta**8:.3e}", trace
        )
    return B2, StepRecord(gamma, t, ell, corr, e0, e1)


def energy_increment_step(
    f: GridFunction, B: Factor, delta: float, cfg: RegularityConfig = RegularityConfig()
) -> Factor:
    """One refinement B -> B' with ||f_B'||^2 - ||f_B||^2 >= c0 delta^8."""
    _check_group(f, B)
    return _energy_step(f, B, delta, cfg, trace=(B, [energy(f, B)], []))[0]


@dataclass(frozen=True, eq=False)
class DecompositionReport:
    factor: Factor
    iterations: int
    energy_trace: list[float]
    final_u2: float
    chosen_characters: list[tuple[int, float, float]]
    steps: list[StepRecord] = field(default_factory=list)
    delta: float | None = None

    def to_record(self) -> dict:
        return {
            "type": "decomposition",
            "group": list(self.factor.group.invariant_factors),
            "delta": self.delta,
            "iterations": self.iterations,
            "cell_of": self.factor.cell_of.tolist(),
            "energy_trace": list(self.energy_trace),
            "chosen": [list(c) for c in self.chosen_characters],
            "final_u2": self.final_u2,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "DecompositionReport":
        G = make_group(rec["group"])
        B = Factor(G, np.array(rec["cell_of"], dtype=np.int64))
        rep = cls(
            factor=B,
            iterations=int(rec["iterations"]),
            energy_trace=[float(e) for e in rec["energy_trace"]],
            final_u2=float(rec["final_u2"]),
            chosen_characters=[(int(g), float(t), float(l)) for g, t, l in rec["chosen"]],
            delta=rec.get("delta"),
        )
        rep.validate()
        return rep

    def validate(self):
        tr = self.energy_trace
        if len(tr) != self.iterations + 1 or len(self.chosen_characters) != self.iterations:
            raise InvariantViolation("trace length does not match iteration count")
        if any(b <= a for a, b in zip(tr, tr[1:])):
            raise InvariantViolation("energy trace is not strictly increasing")
        if self.factor.m > 2**self.iterations:
            raise InvariantViolation("more cells than 2^iterations")
        if self.delta is not None and self.final_u2 > self.delta:
            raise InvariantViolation("final U^2 norm exceeds delta")


def weak_regularity(
    f: GridFunction, delta: float, cfg: RegularityConfig = RegularityConfig()
) -> DecompositionReport:
    """Factor B with ||f - f_B||_{U^2} <= delta, by iterated energy increment."""
    _check_bounded(f)
    if not 0 < delta < 0.5:
        raise ValidationError("delta must lie in (0, 1/2)")
    cap = cfg.iteration_cap(delta)
    B = Factor.trivial(f.group)
    trace = [energy(f, B)]
    steps: list[StepRecord] = []
    while True:
        u2 = u2_norm(f - project(f, B))
        if u2 <= delta:
            break
        if len(steps) >= cap:
            raise IterationCapExceeded(f"no convergence after {cap} iterations (delta={delta})")
        B, rec = _energy_step(f, B, delta, cfg, trace=(B, list(trace), list(steps)))
        steps.append(rec)
        trace.append(rec.energy_after)
    return DecompositionReport(
        factor=B,
        iterations=len(steps),
        energy_trace=trace,
        final_u2=u2,
        chosen_characters=[(s.gamma, s.t, s.ell) for s in steps],
        steps=steps,
        delta=delta,
    )


# ---------------------------------------------------------------------------
# counting lemma


def counting_lemma_exceptions(f: GridFunction, g: GridFunction, delta: float) -> tuple[int, float]:
    """(#{x : |(f*g)(x)| > delta^(1/2)}, delta |G|)."""
    from .spectral import convolve

    conv = convolve(f, g).values
    return int(np.sum(np.abs(conv) > math.sqrt(delta))), delta * f.group.order


# ---------------------------------------------------------------------------
# structure of sumsets


def delta_for_eps(eps) -> float:
    """A delta meeting 2 delta^(1/2) < eps^3 with a factor-2 margin."""
    e = float(Fraction(eps))
    return (e**3 / 4) ** 2


@dataclass(frozen=True, eq=False)
class SupersetReport:
    superset: GSet
    decomposition: DecompositionReport
    eps: Fraction
    missing: int  # |A \ A'|
    spurious: int  # |S_eps(A') \ (A + A)|

    @property
    def bound(self) -> Fraction:
        return self.eps * self.superset.group.order

    @property
    def missing_fraction(self) -> Fraction:
        return Fraction(self.missing, self.superset.group.order)

    @property
    def spurious_fraction(self) -> Fraction:
        return Fraction(self.spurious, self.superset.group.order)

    def to_record(self) -> dict:
        from .setops import format_set_literal

        return {
            "type": "structured_superset",
            "eps": str(self.eps),
            "superset": format_set_literal(self.superset),
            "cells": self.decomposition.factor.m,
            "missing": self.missing,
            "spurious": self.spurious,
            "missing_fraction": float(self.missing_fraction),
            "spurious_fraction": float(self.spurious_fraction),
            "bound": float(self.eps),
        }


def check_delta_eps(delta: float, eps) -> None:
    eps = Fraction(eps)
    if not 0 < eps < Fraction(1, 2):
        raise ValidationError("eps must lie in (0, 1/2)")
    # 2 delta^(1/2) < eps^3  <=>  4 delta < eps^6
    if not 4 * Fraction(delta) < eps**6:
        raise ValidationError(
            f"delta={delta} violates 2*delta^(1/2) < eps^3 (need delta < {float(eps**6 / 4):.3g})"
        )


def dense_cells(A: GSet, B: Factor, eps) -> GSet:
    """Union of the cells of B in which A has relative density >= eps."""
    eps = Fraction(eps)
    hits = np.bincount(B.cell_of, weights=A.bits.astype(np.int64), minlength=B.m).astype(np.int64)
    dense = (hits.astype(object) * eps.denominator >= eps.numerator * B.cell_sizes.astype(object)).astype(bool)
    return GSet.from_bits(A.group, dense[B.cell_of])


def structured_superset(
    A: GSet, eps, delta: float, cfg: RegularityConfig = RegularityConfig()
) -> tuple[GSet, SupersetReport]:
    """A' = union of the cells of a regular factor on which 1_A has density >= eps.

    Checks |A \\ A'| <= eps|G| and |S_eps(A') \\ (A+A)| <= eps|G|.
    """
    eps = Fraction(eps)
    check_delta_eps(delta, eps)
    G = A.group
    f = GridFunction(G, A.indicator(), bounded=True)
    dec = weak_regularity(f, delta, cfg)
    B = dec.factor
    A2 = dense_cells(A, B, eps)
    missing = (A - A2).card
    spurious = (popular_sums(A2, eps) - sumset(A, A)).card if A2.card else 0
    rep = SupersetReport(A2, dec, eps, missing, spurious)
    if missing > rep.bound or spurious > rep.bound:
        raise InvariantViolation(
            f"structured superset defects exceed eps|G|={float(rep.bound)}: missing={missing}, spurious={spurious}"
        )
    return A2, rep


# ---------------------------------------------------------------------------
# popular-sum restriction (greedy)


@dataclass(frozen=True, eq=False)
class RestrictReport:
    restricted: GSet
    removed: list[int]
    delta: Fraction
    eps: Fraction
    unpopular_remaining: int

    @property
    def removed_fraction(self) -> Fraction:
        return Fraction(len(self.removed), self.restricted.group.order)

    @property
    def unpopular_fraction(self) -> Fraction:
        return Fraction(self.unpopular_remaining, self.restricted.group.order)

    @property
    def within_eps(self) -> bool:
        """Reported only; the greedy loop does not certify this bound."""
        return self.removed_fraction <= self.eps


def _unpopular_participation(A2: GSet, X: GSet) -> np.ndarray:
    """cnt[a] = #{b in A2 : a + b in X}."""
    G = A2.group
    FA = np.fft.fftn(A2.indicator().reshape(G.shape))
    FX = np.fft.fftn(X.indicator().reshape(G.shape))
    return np.rint(np.fft.ifftn(FX * np.conj(FA)).real.reshape(-1)).astype(np.int64)


def popular_restrict(A: GSet, delta, eps) -> tuple[GSet, RestrictReport]:
    """Greedily drop elements of A until every sum of the remainder is
    delta-popular in A."""
    delta, eps = Fraction(delta), Fraction(eps)
    if not (0 < delta < Fraction(1, 2) and 0 < eps < Fraction(1, 2)):
        raise ValidationError("delta and eps must lie in (0, 1/2)")
    S = popular_sums(A, delta)
    A2 = A
    removed = []
    while True:
        X = sumset(A2, A2) - S
        if X.card == 0:
            break
        cnt = _unpopular_participation(A2, X)
        cnt[~A2.bits] = -1
        worst = int(np.argmax(cnt))  # first maximum = smallest element
        removed.append(worst)
        A2 = GSet(A.group, A2.mask & ~(1 << worst))
    rep = RestrictReport(A2, removed, delta, eps, (sumset(A2, A2) - S).card)
    return A2, rep


# ---------------------------------------------------------------------------
# measurability probe


@dataclass(frozen=True)
class MeasurabilityProbe:
    M: float
    achieved_l2_error: float
    achieved_spectral_l1: float
    truncation_size: int
    reached: bool = True


def measurability_probe(E: GSet, M_list: Sequence[float]) -> list[MeasurabilityProbe]:
    """For each M, the fewest top Fourier coefficients of 1_E whose
    (unit-disc clamped) reconstruction is within 1/M of 1_E in L^2, and
    the l^1 spectral mass of that reconstruction."""
    G = E.group
    target = E.indicator()
    coeffs = fourier(GridFunction(G, target)).coeffs
    order = np.argsort(-np.abs(coeffs), kind="stable")
    goals = sorted({float(M) for M in M_list})
    first_k: dict[float, tuple[int, float]] = {}
    approx = np.zeros(G.order, dtype=np.complex128)
    best = (G.order, np.inf)
    for k, gamma in enumerate(order, start=1):
        approx += coeffs[gamma] * character(G, int(gamma)).values
        clamped = approx / np.maximum(1.0, np.abs(approx))
        err = float(np.sqrt(np.mean(np.abs(target - clamped) ** 2)))
        if err < best[1]:
            best = (k, err)
        for M in goals:
            if M not in first_k and err <= 1 / M:
                first_k[M] = (k, err)
        if len(first_k) == len(goals):
            break
    out = []
    for M in M_list:
        M = float(M)
        k, err = first_k.get(M, best)
        approx = inverse_fourier(
            Spectrum(G, np.where(np.isin(np.arange(G.order), order[:k]), coeffs, 0))
        ).values
        clamped = approx / np.maximum(1.0, np.abs(approx))
        l1 = float(np.abs(fourier(GridFunction(G, clamped)).coeffs).sum())
        out.append(MeasurabilityProbe(M, err, l1, k, reached=M in first_k))
    return out
