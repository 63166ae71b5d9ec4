"""The extremal constant f(alpha), the interval-cap-subgroup construction that
attains it, and the additive/multiplicative orthogonality estimates.

    f(alpha) = min over integers l >= 1 of max(2 l alpha, 1/l), capped at 1.

All f(alpha) arithmetic is exact (``fractions.Fraction``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import InvariantViolation, ValidationError
from .groups import GroupSpec, find_primitive_root, is_prime, mul_subgroup
from .setops import GSet, product_set, sumset

Rational = Union[Fraction, int, str, float]


def as_fraction(x: Rational) -> Fraction:
    """Exact rational from 'a/b', a decimal string, an int, a Fraction or a float
    (floats go through their shortest repr, so 0.05 means 1/20)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    try:
        return Fraction(str(x).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not a rational number: {x!r}") from exc


# ---------------------------------------------------------------------------
# f(alpha)


@dataclass(frozen=True)
class ThresholdProfile:
    alpha: Fraction
    value: Fraction
    optimal_ell: int
    branch: str  # "flat" | "linear" | "saturated"

    @property
    def asymptote(self) -> float:
        """sqrt(2 alpha), the small-alpha behaviour of f."""
        return math.sqrt(2 * self.alpha)


def _objective(ell: int, alpha: Fraction) -> Fraction:
    return max(2 * ell * alpha, Fraction(1, ell))


def f_alpha(alpha: Rational) -> ThresholdProfile:
    alpha = as_fraction(alpha)
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    # 2 l alpha <= 1/l  iff  l^2 <= 1/(2 alpha); the min sits at the last such l or the next one
    l0 = max(1, math.isqrt(math.floor(1 / (2 * alpha))))
    value, ell = min((_objective(l, alpha), l) for l in (l0, l0 + 1))
    if value >= 1:
        return ThresholdProfile(alpha, Fraction(1), 1, "saturated")
    branch = "flat" if value == Fraction(1, ell) else "linear"
    return ThresholdProfile(alpha, value, ell, branch)


def flat_branch(ell: int, alpha: Fraction) -> Fraction:
    return Fraction(1, ell)


def linear_branch(ell: int, alpha: Fraction) -> Fraction:
    return 2 * (ell + 1) * alpha


def f_alpha_piecewise(alpha: Rational) -> Fraction:
    """f(alpha) from the explicit piecewise form:

    1                 for 1/2 <= alpha,
    1/l               for 1/(2l(l+1)) <= alpha <= 1/(2l^2),
    2(l+1) alpha      for 1/(2(l+1)^2) <= alpha <= 1/(2l(l+1)).
    """
    alpha = as_fraction(alpha)
    if alpha >= Fraction(1, 2):
        return Fraction(1)
    ell = math.isqrt(math.floor(1 / (2 * alpha)))
    while Fraction(1, 2 * (ell + 1) ** 2) > alpha:
        ell += 1
    while ell > 1 and Fraction(1, 2 * ell**2) < alpha:
        ell -= 1
    if alpha >= Fraction(1, 2 * ell * (ell + 1)):
        return flat_branch(ell, alpha)
    return linear_branch(ell, alpha)


def min_bruteforce_range(alpha: Rational) -> int:
    """ceil((2 alpha)^(-1/2)) + 1, the smallest admissible L for the brute force."""
    inv = 1 / (2 * as_fraction(alpha))
    c = math.isqrt(math.ceil(inv))
    if c * c < inv:
        c += 1
    return c + 1


def f_alpha_bruteforce(alpha: Rational, L: int) -> Fraction:
    alpha = as_fraction(alpha)
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if L < min_bruteforce_range(alpha):
        raise ValidationError(f"L={L} too small; need at least {min_bruteforce_range(alpha)}")
    return min(Fraction(1), min(_objective(l, alpha) for l in range(1, L + 1)))


# ---------------------------------------------------------------------------
# extremal construction


@dataclass(frozen=True)
class ConstructionParams:
    p: int
    ell: int
    N: int

    def __post_init__(self):
        if not (self.p > 2 and is_prime(self.p)):
            raise ValidationError(f"p={self.p} is not an odd prime")
        if self.ell < 1 or (self.p - 1) % self.ell:
            raise ValidationError(f"ell={self.ell} does not divide p-1={self.p - 1}")
        if not 1 <= self.N < self.p:
            raise ValidationError(f"N={self.N} must lie in [1, p)")

    @classmethod
    def from_alpha(cls, p: int, ell: int, alpha: Rational) -> "ConstructionParams":
        """N = ceil(ell * alpha * p), capped at p - 1."""
        N = math.ceil(ell * as_fraction(alpha) * p)
        return cls(p, ell, min(max(N, 1), p - 1))


@dataclass(frozen=True)
class ConstructionReport:
    params: ConstructionParams
    card: int
    sum_size: int
    prod_size: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(max(self.sum_size, self.prod_size), self.params.p)

    @property
    def density(self) -> Fraction:
        return Fraction(self.card, self.params.p)

    @property
    def envelope(self) -> Fraction:
        """max(2 l alpha, 1/l) at alpha = |A|/p."""
        return _objective(self.params.ell, self.density)


def construct_extremal(params: ConstructionParams) -> tuple[GSet, ConstructionReport]:
    """A = [1, N] cap H, H the index-ell subgroup of F_p^x."""
    p, ell, N = params.p, params.ell, params.N
    H = mul_subgroup(p, ell)
    A = GSet(H.group, H.mask & (((1 << (N + 1)) - 1) ^ 1))
    s, m = sumset(A, A).card, product_set(A, A).card
    if A.card and s > 2 * N - 1:
        raise InvariantViolation(f"|A+A|={s} exceeds 2N-1={2 * N - 1}")
    if m > (p - 1) // ell:
        raise InvariantViolation(f"|A.A|={m} exceeds |H|={(p - 1) // ell}")
    return A, ConstructionReport(params, A.card, s, m)


@dataclass(frozen=True)
class PolyaVinogradovReport:
    count: int
    N_over_ell: Fraction
    deviation: float
    bound: float

    @property
    def within(self) -> bool:
        return self.deviation <= self.bound


def polya_vinogradov_report(params: ConstructionParams) -> PolyaVinogradovReport:
    """| |[1,N] cap H| - N/ell | against sqrt(p) log p (implied constant 1)."""
    H = mul_subgroup(params.p, params.ell)
    count = sum(1 for x in H.elements() if 1 <= x <= params.N)
    target = Fraction(params.N, params.ell)
    return PolyaVinogradovReport(
        count, target, float(abs(count - target)), math.sqrt(params.p) * math.log(params.p)
    )


# ---------------------------------------------------------------------------
# additive x multiplicative orthogonality


def dirichlet_character(p: int, j: int) -> np.ndarray:
    """Values chi_j(n) for n in [0, p), chi_j(g^k) = e(jk/(p-1)), chi_j(0) = 0."""
    ms = find_primitive_root(p)
    out = np.zeros(p, dtype=np.complex128)
    out[ms.exp] = np.exp(2j * np.pi * (j % (p - 1)) * np.arange(p - 1) / (p - 1))
    return out


def gauss_orthogonality(p: int, r: int, chi_index: int) -> complex:
    """E_{n in F_p} e_p(r n) conj chi(n)."""
    n = np.arange(p)
    add = np.exp(2j * np.pi * ((r * n) % p) / p)
    return complex(np.mean(add * np.conj(dirichlet_character(p, chi_index))))


@dataclass(frozen=True)
class IntersectReport:
    actual: int
    predicted: Fraction
    error: float
    fg_bound: float
    K: float
    additive_terms: int
    multiplicative_terms: int
    pv_bound: float

    @property
    def within_fg(self) -> bool:
        return self.error <= self.fg_bound

    @property
    def within_pv(self) -> bool:
        return self.error <= self.pv_bound


def _truncation_curves(coeffs: np.ndarray, budget: int):
    """Cumulative l^1 and l^2^2 mass of the top-k coefficients (trivial one first)."""
    mags = np.abs(coeffs)
    rest = 1 + np.argsort(-mags[1:], kind="stable")
    order = np.concatenate([[0], rest])[:budget]
    return np.cumsum(mags[order]), np.cumsum(mags[order] ** 2), mags[0]


def intersect_estimate(A1: GSet, A2: GSet, spectral_budget: int = 64) -> IntersectReport:
    """|A1 cap A2| against |A1||A2|/p with an explicit error bound.

    A1 is truncated to its top-k additive Fourier coefficients (f), A2 \\ {0}
    to its top-k multiplicative ones (g). Then, with averages over F_p,

        <1_A1, 1_A2'> = <f, g> + <1_A1 - f, 1_A2'> + <f, 1_A2' - g>

    and <f, g> equals the main term |A1||A2'|/p^2 up to
    p^(-1/2) (||fhat||_1 ||ghat||_1 - |fhat(0) ghat(chi_0)|), since every
    other Gauss-sum average has modulus at most p^(-1/2). The two leakage
    terms are bounded by Cauchy-Schwarz. A possible 0 in A2 adds at most 1.
    The bound is minimized over truncation sizes up to ``spectral_budget``.
    """
    A1._check(A2)
    p = A1.group.order
    if not (p > 2 and is_prime(p)):
        raise ValidationError("intersection estimate needs F_p, p an odd prime")
    ms = find_primitive_root(p)
    budget = max(1, int(spectral_budget))
    # additive side
    fhat = np.fft.fft(A1.indicator()) / p
    l1_a, l2_a, top_a = _truncation_curves(fhat, min(budget, p))
    mass_a = A1.card / p
    resid_a = np.sqrt(np.maximum(mass_a - l2_a, 0.0))
    norm_f = np.sqrt(l2_a)
    # multiplicative side, on [p-1] via dlog; norms rescaled to F_p averages
    h = A2.bits[ms.exp].astype(np.float64)
    ghat = np.fft.fft(h) / (p - 1)
    l1_m, l2_m, top_m = _truncation_curves(ghat, min(budget, p - 1))
    card2 = int(h.sum())
    scale = (p - 1) / p
    resid_m = np.sqrt(np.maximum(scale * (card2 / (p - 1) - l2_m), 0.0))
    norm_a2 = math.sqrt(card2 / p)

    weil = (np.outer(l1_a, l1_m) - top_a * top_m) / math.sqrt(p)
    total = resid_a[:, None] * norm_a2 + norm_f[:, None] * resid_m[None, :] + weil
    i, j = np.unravel_index(int(np.argmin(total)), total.shape)
    zero_term = 1.0 if 0 in A2 else 0.0
    bound = p * float(total[i, j]) + zero_term + 1e-9 * p

    actual = (A1 & A2).card
    predicted = Fraction(A1.card * A2.card, p)
    error = float(abs(actual - predicted))
    rep = IntersectReport(
        actual=actual,
        predicted=predicted,
        error=error,
        fg_bound=bound,
        K=float(max(l1_a[i], l1_m[j])),
        additive_terms=int(i) + 1,
        multiplicative_terms=int(j) + 1,
        pv_bound=math.sqrt(p) * math.log(p),
    )
    if not rep.within_fg:
        raise InvariantViolation(f"intersection error {error} exceeds bound {bound}")
    return rep


def interval(G: GroupSpec, start: int, length: int) -> GSet:
    return GSet.from_elements(G, ((start + i) % G.order for i in range(length)))


def mul_coset(p: int, ell: int, c: int) -> GSet:
    """c * H for H the index-ell subgroup."""
    H = mul_subgroup(p, ell)
    return GSet.from_elements(H.group, (c * h % p for h in H.elements()))
