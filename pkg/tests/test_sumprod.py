import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumproduct.errors import ValidationError
from sumproduct.groups import make_group, mul_subgroup
from sumproduct.setops import GSet, product_set, sumset
from sumproduct.sumprod import (
    ConstructionParams,
    as_fraction,
    construct_extremal,
    dirichlet_character,
    f_alpha,
    f_alpha_bruteforce,
    f_alpha_piecewise,
    flat_branch,
    gauss_orthogonality,
    interval,
    intersect_estimate,
    linear_branch,
    min_bruteforce_range,
    mul_coset,
    polya_vinogradov_report,
)

alphas = st.fractions(min_value=Fraction(1, 10**6), max_value=Fraction(999, 1000))


def oracle_f(alpha):
    """min(1, min over l <= 3000 of max(2 l alpha, 1/l)); alpha >= 1e-6 keeps the argmin in range."""
    return min(Fraction(1), min(max(2 * l * alpha, Fraction(1, l)) for l in range(1, 3001)))


@pytest.mark.parametrize(
    "alpha,value,ell",
    [("1/2", 1, 1), ("1/12", Fraction(1, 2), 2), ("1/16", Fraction(3, 8), 3), ("1/50", Fraction(1, 5), 5), ("1/4", 1, 1)],
)
def test_f_alpha_anchors(alpha, value, ell):
    t = f_alpha(alpha)
    assert t.value == value and t.optimal_ell == ell


def test_f_alpha_branches():
    assert f_alpha("1/12").branch == "flat"
    assert f_alpha("1/16").branch == "linear"
    assert f_alpha("0.3").branch == "saturated"
    assert f_alpha("1/200").asymptote == pytest.approx(0.1)


@pytest.mark.parametrize("bad", [0, 1, "-1/3", "3/2", "abc", "1/0"])
def test_f_alpha_domain(bad):
    with pytest.raises(ValidationError):
        f_alpha(bad)


@given(alphas)
def test_f_alpha_matches_oracle(alpha):
    assert f_alpha(alpha).value == oracle_f(alpha)
    assert f_alpha_piecewise(alpha) == oracle_f(alpha)
    assert f_alpha_bruteforce(alpha, min_bruteforce_range(alpha)) == oracle_f(alpha)


@given(alphas, alphas)
def test_f_alpha_monotone(a, b):
    a, b = min(a, b), max(a, b)
    assert f_alpha(a).value <= f_alpha(b).value


def test_f_alpha_dense_monotone():
    vals = [f_alpha(Fraction(k, 20000)).value for k in range(1, 20000)]
    assert all(x <= y for x, y in zip(vals, vals[1:]))


@pytest.mark.parametrize("ell", range(1, 51))
def test_branch_continuity(ell):
    a = Fraction(1, 2 * ell * (ell + 1))
    assert flat_branch(ell, a) == linear_branch(ell, a) == f_alpha(a).value
    if ell > 1:
        a = Fraction(1, 2 * ell * ell)
        assert flat_branch(ell, a) == linear_branch(ell - 1, a) == f_alpha(a).value


def test_bruteforce_examples():
    assert f_alpha_bruteforce("0.3", 10) == 1
    assert f_alpha_bruteforce("1/12", 10) == Fraction(1, 2)
    assert f_alpha_bruteforce("0.005", 100) == Fraction(1, 10)
    assert min_bruteforce_range("1/12") == 4  # ceil(sqrt 6) + 1
    with pytest.raises(ValidationError):
        f_alpha_bruteforce("0.005", 5)


def test_as_fraction():
    assert as_fraction(0.05) == Fraction(1, 20)
    assert as_fraction("1/12") == Fraction(1, 12)
    assert as_fraction(" 0.25 ") == Fraction(1, 4)
    assert as_fraction(3) == 3


def test_small_alpha_asymptote():
    for k in (2, 3, 4, 5, 6):
        alpha = Fraction(1, 10**k)
        assert float(f_alpha(alpha).value) / math.sqrt(2 * alpha) == pytest.approx(1, abs=2 * math.sqrt(2 * alpha) + 1e-9)


# -- construction -------------------------------------------------------------


def test_construction_p13():
    A, rep = construct_extremal(ConstructionParams(13, 3, 6))
    assert A.elements() == [1, 5]
    assert (rep.card, rep.sum_size, rep.prod_size) == (2, 3, 3)
    assert product_set(A, A).issubset(mul_subgroup(13, 3))
    A, rep = construct_extremal(ConstructionParams(13, 1, 12))
    assert A.elements() == list(range(1, 13)) and rep.prod_size == 12


def test_construction_params_validation():
    with pytest.raises(ValidationError):
        ConstructionParams(13, 5, 6)
    with pytest.raises(ValidationError):
        ConstructionParams(15, 2, 6)
    with pytest.raises(ValidationError):
        ConstructionParams(13, 3, 13)
    assert ConstructionParams.from_alpha(9973, 3, "0.05").N == math.ceil(3 * 0.05 * 9973)


@pytest.mark.parametrize("p,ell", [(101, 2), (101, 4), (211, 3), (211, 5), (1009, 4), (1009, 2)])
@pytest.mark.parametrize("alpha", ["0.03", "0.08", "0.15"])
def test_construction_envelope(p, ell, alpha):
    params = ConstructionParams.from_alpha(p, ell, alpha)
    A, rep = construct_extremal(params)
    H = set(mul_subgroup(p, ell).elements())
    assert set(A.elements()) == {x for x in range(1, params.N + 1) if x in H}
    assert rep.sum_size == sumset(A, A).card <= 2 * params.N - 1
    assert rep.prod_size == product_set(A, A).card <= (p - 1) // ell
    assert rep.ratio <= rep.envelope + Fraction(2, p)


def test_polya_vinogradov_examples():
    r = polya_vinogradov_report(ConstructionParams(13, 3, 6))
    assert (r.count, r.N_over_ell, r.deviation) == (2, 2, 0)
    r = polya_vinogradov_report(ConstructionParams(101, 2, 50))
    qr = {x * x % 101 for x in range(1, 101)}
    assert r.count == sum(1 for x in range(1, 51) if x in qr)
    assert r.within and r.deviation == abs(r.count - 25)


# -- Gauss sums and intersections ------------------------------------------


def test_dirichlet_character_is_multiplicative():
    p = 31
    for j in (1, 5, 15):
        chi = dirichlet_character(p, j)
        for a in range(1, p):
            for b in range(1, p):
                assert abs(chi[a * b % p] - chi[a] * chi[b]) < 1e-12
        assert chi[0] == 0


def test_gauss_examples():
    quad = 3  # index (p-1)/2 is the quadratic character for p = 7
    assert abs(gauss_orthogonality(7, 1, quad)) == pytest.approx(7**-0.5, abs=1e-10)
    assert abs(gauss_orthogonality(7, 0, 2)) < 1e-12
    assert abs(gauss_orthogonality(7, 1, 0)) == pytest.approx(1 / 7, abs=1e-12)
    assert gauss_orthogonality(7, 0, 0) == pytest.approx(1 - 1 / 7)
    # quadratic character is the Legendre symbol
    chi = dirichlet_character(7, quad).real
    assert [round(v) for v in chi[1:]] == [1, 1, -1, 1, -1, -1]


@pytest.mark.parametrize("p", [11, 13, 29])
def test_gauss_magnitude_all_pairs(p):
    for r in range(1, p):
        for j in range(1, p - 1):
            assert abs(abs(gauss_orthogonality(p, r, j)) - p**-0.5) < 1e-10


def test_intersect_full_sets():
    G = make_group([101])
    rep = intersect_estimate(GSet.full(G), GSet.full(G) - GSet.from_elements(G, [0]))
    assert rep.actual == 100 and rep.predicted == 100 and rep.error <= 1


@pytest.mark.parametrize("p,length,ell", [(211, 70, 3), (1009, 333, 2), (1009, 100, 4), (10007, 5003, 2)])
def test_intersect_interval_vs_coset(p, length, ell):
    G = make_group([p])
    for c in (1, 2, 3):
        A1, A2 = interval(G, 0, length), mul_coset(p, ell, c)
        rep = intersect_estimate(A1, A2)
        assert rep.actual == len(set(A1.elements()) & set(A2.elements()))
        assert rep.predicted == Fraction(A1.card * A2.card, p)
        assert rep.error <= rep.fg_bound
        assert rep.error <= math.sqrt(p) * math.log(p)


def test_intersect_bound_is_honest_for_unstructured_sets(rng):
    # the bound must hold (possibly loosely) for any pair, not just structured ones
    G = make_group([211])
    for _ in range(20):
        A1 = GSet.from_bits(G, rng.random(211) < 0.5)
        A2 = GSet.from_bits(G, rng.random(211) < 0.5)
        rep = intersect_estimate(A1, A2, spectral_budget=8)
        assert rep.error <= rep.fg_bound


def test_mul_coset():
    assert mul_coset(13, 3, 1) == mul_subgroup(13, 3)
    assert mul_coset(13, 3, 2).elements() == sorted(2 * h % 13 for h in [1, 5, 8, 12])
    assert np.isclose(interval(make_group([7]), 5, 4).elements(), [0, 1, 5, 6]).all()
