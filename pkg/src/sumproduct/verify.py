"""Invariant suites run by ``sumproduct verify``.

Each suite is a list of named checks; a check returns ``(ok, detail)``.
Inputs are drawn from fixed-seed generators so every run is identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import regularity as reg
from .groups import find_primitive_root, is_prime, make_group
from .search import exhaustive_search
from .setops import (
    GSet,
    cauchy_davenport_holds,
    kneser_check,
    lemma_kneser_bound,
    sumset,
    sumset_reference,
)
from .spectral import (
    GridFunction,
    convolve,
    convolve_naive,
    fourier,
    fourier_naive,
    inverse_fourier,
    u2_norm,
    u2_norm_direct,
)
from .sumprod import (
    f_alpha,
    f_alpha_bruteforce,
    f_alpha_piecewise,
    flat_branch,
    dirichlet_character,
    gauss_orthogonality,
    linear_branch,
    min_bruteforce_range,
)


@dataclass
class CheckResult:
    suite: str
    name: str
    ok: bool
    seconds: float
    detail: str = ""


def abelian_groups(max_order: int):
    """Every abelian group of order <= max_order, as invariant factors n1 | n2 | ..."""
    for n in range(2, max_order + 1):
        yield from _invariant_chains(n)


def _invariant_chains(n: int):
    out = []

    def rec(rem, prev, acc):
        if rem == 1:
            out.append(tuple(acc))
            return
        for d in range(2, rem + 1):
            if rem % d == 0 and (prev is None or d % prev == 0):
                rec(rem // d, d, acc + [d])

    rec(n, None, [])
    return out


def _random_functions(rng, count, max_order, complex_values=True):
    for _ in range(count):
        k = int(rng.integers(1, 4))
        while True:
            factors = [int(x) for x in rng.integers(2, 17, size=k)]
            if math.prod(factors) <= max_order:
                break
        G = make_group(factors)
        v = rng.normal(size=G.order)
        if complex_values:
            v = v + 1j * rng.normal(size=G.order)
        yield GridFunction(G, v)


def check_spectral():
    rng = np.random.default_rng(2024)
    worst = {"parseval": 0.0, "inversion": 0.0, "convolution": 0.0, "naive": 0.0, "u2": 0.0}
    for f in _random_functions(rng, 100, 4096):
        S = fourier(f)
        worst["parseval"] = max(
            worst["parseval"], abs(np.sqrt(np.mean(np.abs(f.values) ** 2)) - np.sqrt(np.sum(np.abs(S.coeffs) ** 2)))
        )
        worst["inversion"] = max(worst["inversion"], float(np.abs(inverse_fourier(S).values - f.values).max()))
        g = GridFunction(f.group, rng.normal(size=f.group.order))
        lhs = fourier(convolve(f, g)).coeffs
        worst["convolution"] = max(worst["convolution"], float(np.abs(lhs - S.coeffs * fourier(g).coeffs).max()))
    for f in _random_functions(rng, 20, 128):
        worst["naive"] = max(worst["naive"], float(np.abs(fourier(f).coeffs - fourier_naive(f).coeffs).max()))
        g = GridFunction(f.group, rng.normal(size=f.group.order))
        worst["convolution"] = max(
            worst["convolution"], float(np.abs(convolve(f, g).values - convolve_naive(f, g).values).max())
        )
        worst["u2"] = max(worst["u2"], abs(u2_norm(f) - u2_norm_direct(f)))
    tol = {"parseval": 1e-10, "inversion": 1e-10, "convolution": 1e-10, "naive": 1e-10, "u2": 1e-9}
    return all(worst[k] <= tol[k] for k in tol), ", ".join(f"{k}={v:.2e}" for k, v in worst.items())


def check_dlog():
    for p in (3, 5, 7, 11, 13, 101, 1009, 10007):
        ms = find_primitive_root(p)
        if any(pow(ms.primitive_root, int(ms.dlog[x]), p) != x for x in range(1, p)):
            return False, f"round trip fails at p={p}"
    return True, "p up to 10007"


def check_sumset_kernel():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 600))
        G = make_group([n])
        A = GSet.from_bits(G, rng.random(n) < rng.random())
        B = GSet.from_bits(G, rng.random(n) < rng.random())
        if sumset(A, B) != sumset_reference(A, B):
            return False, f"mismatch on order {n}"
    return True, "200 random cyclic instances"


def check_cauchy_davenport():
    for p in (5, 7, 11, 13):
        G = make_group([p])
        for mask in range(1, 1 << p):
            if not cauchy_davenport_holds(GSet(G, mask)):
                return False, f"p={p}, mask={mask}"
    return True, "exhaustive p in {5,7,11,13}"


def kneser_exhaustive(max_order: int = 16) -> tuple[int, int, int]:
    """(sets checked, Kneser failures, bound failures) over every abelian group
    of order <= max_order, every nonempty subset, every ell <= 8."""
    checked = kneser_bad = lemma_bad = 0
    for n in range(2, max_order + 1):
        for factors in _invariant_chains(n):
            G = make_group(factors)
            for mask in range(1, 1 << n):
                A = GSet(G, mask)
                checked += 1
                try:
                    rep = kneser_check(A)
                except AssertionError:
                    kneser_bad += 1
                    continue
                if not all(lemma_kneser_bound(A, ell, rep.lhs) for ell in range(1, 9)):
                    lemma_bad += 1
    return checked, kneser_bad, lemma_bad


def check_kneser():
    checked, kb, lb = kneser_exhaustive(16)
    return kb == 0 and lb == 0, f"{checked} sets, {kb} Kneser failures, {lb} bound failures"


def check_pythagoras():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(50):
        p = int(rng.choice([101, 211]))
        G = make_group([p])
        A = GSet.from_bits(G, np.arange(p) < int(rng.integers(p // 5, p // 2)))
        f = GridFunction(G, A.indicator())
        dec = reg.weak_regularity(f, 0.25)
        B = reg.Factor.trivial(G)
        for gamma, t, ell in dec.chosen_characters:
            B2 = reg.refine_by_set(B, reg.level_set(G, gamma, t, ell))
            lhs, rhs = reg.pythagoras_gap(f, B, B2)
            worst = max(worst, abs(lhs - rhs))
            B = B2
    return worst <= 1e-12, f"max gap {worst:.2e}"


def _synthetic_pair(rng, G, delta):
    """1-bounded (f, g) with ||g||_U2 <= delta; g mixes a character with noise
    and f is phase-aligned against g at one point half of the time."""
    n = G.order
    chi = np.exp(2j * np.pi * int(rng.integers(0, n)) * np.arange(n) / n)
    noise = np.exp(2j * np.pi * rng.random(n))
    a = rng.random()
    raw = GridFunction(G, a * chi + (1 - a) * noise)
    scale = min(1.0, delta * rng.uniform(0.7, 1.0) / u2_norm(raw))
    g = GridFunction(G, raw.values * scale)
    if rng.random() < 0.5:
        x0 = int(rng.integers(0, n))
        src = (x0 - np.arange(n)) % n
        f = GridFunction(G, np.exp(-1j * np.angle(g.values[src])))
    else:
        f = GridFunction(G, np.exp(2j * np.pi * rng.random(n)))
    return f, g


def check_counting():
    rng = np.random.default_rng(5)
    bad = tested = 0
    worst = 0.0
    while tested < 100:
        G = make_group([int(rng.choice([64, 101, 128, 257]))])
        delta = float(rng.choice([0.2, 0.3, 0.4]))
        f, g = _synthetic_pair(rng, G, delta)
        if u2_norm(g) > delta:
            continue
        tested += 1
        count, bound = reg.counting_lemma_exceptions(f, g, delta)
        bad += count > bound
        worst = max(worst, count / bound)
    return bad == 0, f"{bad} violations in {tested} pairs, worst count/bound {worst:.3f}"


def check_gauss():
    worst = 0.0
    for p in range(3, 102):
        if not is_prime(p):
            continue
        n = np.arange(p)
        add = np.exp(2j * np.pi * np.outer(np.arange(1, p), n) / p)
        chars = np.stack([dirichlet_character(p, j) for j in range(1, p - 1)])
        vals = add @ np.conj(chars).T / p
        worst = max(worst, float(np.abs(np.abs(vals) - p**-0.5).max()))
        # spot-check the scalar entry point against the batched one
        worst = max(worst, abs(gauss_orthogonality(p, 1, 1) - vals[0, 0]))
    return worst <= 1e-10, f"max deviation {worst:.2e}, all odd p <= 101"


def check_falpha():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        b = int(rng.integers(2, 10**6))
        a = int(rng.integers(1, b))
        alpha = Fraction(a, b)
        if f_alpha(alpha).value != f_alpha_bruteforce(alpha, min_bruteforce_range(alpha)):
            return False, f"mismatch at {alpha}"
        if f_alpha(alpha).value != f_alpha_piecewise(alpha):
            return False, f"piecewise mismatch at {alpha}"
    for ell in range(1, 51):
        a = Fraction(1, 2 * ell * (ell + 1))
        if flat_branch(ell, a) != linear_branch(ell, a):
            return False, f"discontinuity at {a}"
        if ell > 1:
            a = Fraction(1, 2 * ell * ell)
            if flat_branch(ell, a) != linear_branch(ell - 1, a):
                return False, f"discontinuity at {a}"
    return True, "1000 random rationals, branch points l <= 50"


def check_orbit():
    for p in (3, 5, 7, 11, 13):
        for k in range(1, p + 1):
            a = exhaustive_search(p, k)
            b = exhaustive_search(p, k, reduce=False)
            if (a.ratio, a.witness) != (b.ratio, b.witness):
                return False, f"p={p}, k={k}"
    return True, "p <= 13, all min_card"


SUITES: dict[str, list[tuple[str, Callable]]] = {
    "spectral": [("spectral identities", check_spectral)],
    "groups": [("dlog round trip", check_dlog)],
    "setops": [("sumset kernel vs oracle", check_sumset_kernel), ("Cauchy-Davenport", check_cauchy_davenport)],
    "kneser": [("Kneser + ell-fold bound, order <= 16", check_kneser)],
    "pythagoras": [("factor Pythagoras", check_pythagoras)],
    "counting": [("counting lemma", check_counting)],
    "gauss": [("Gauss sum magnitudes", check_gauss)],
    "falpha": [("f(alpha) evaluator", check_falpha)],
    "orbit": [("orbit reduction soundness", check_orbit)],
}


def run_suite(name: str) -> list[CheckResult]:
    names = list(SUITES) if name == "all" else [name]
    out = []
    for s in names:
        if s not in SUITES:
            raise KeyError(s)
        for check_name, fn in SUITES[s]:
            t0 = time.perf_counter()
            ok, detail = fn()
            out.append(CheckResult(s, check_name, bool(ok), time.perf_counter() - t0, detail))
    return out
