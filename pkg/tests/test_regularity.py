import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumproduct import regularity as reg
from sumproduct.errors import ConstantFloorError, InvariantViolation, IterationCapExceeded, ValidationError
from sumproduct.groups import make_group, mul_subgroup
from sumproduct.setops import GSet, popular_sums, sumset
from sumproduct.spectral import GridFunction, character, fourier, inverse_fourier, u2_norm


def ind(A):
    return GridFunction(A.group, A.indicator(), bounded=True)


def interval(G, length, start=0):
    return GSet.from_elements(G, ((start + i) % G.order for i in range(length)))


# -- factors ---------------------------------------------------------------


def test_factor_labels_are_canonical():
    G = make_group([6])
    B = reg.Factor(G, np.array([7, 7, 3, 3, 7, 9]))
    assert B.cell_of.tolist() == [0, 0, 1, 1, 0, 2]
    assert B.m == 3 and B.cell_sizes.tolist() == [3, 2, 1]
    assert B == reg.Factor(G, np.array([0, 0, 5, 5, 0, 1]))
    with pytest.raises(ValidationError):
        reg.Factor(G, np.zeros(5))


def test_project_examples(rng):
    G = make_group([12])
    f = GridFunction(G, rng.normal(size=12))
    assert np.allclose(reg.project(f, reg.Factor.trivial(G)).values, f.values.mean())
    assert np.allclose(reg.project(f, reg.Factor.singletons(G)).values, f.values)
    parity = reg.Factor(G, np.arange(12) % 2)
    fb = reg.project(f, parity).values
    assert np.allclose(fb[0::2], f.values[0::2].mean())
    assert np.allclose(fb[1::2], f.values[1::2].mean())


def test_refine_examples(rng):
    G = make_group([24])
    E = GSet.from_elements(G, [1, 2, 3])
    B = reg.refine_by_set(reg.Factor.trivial(G), E)
    assert B.m == 2 and sorted(c.card for c in B.cells()) == [3, 21]
    B0 = reg.Factor(G, rng.integers(0, 4, size=24))
    assert reg.refine_by_set(B0, GSet.full(G)) == B0
    E = GSet.from_bits(G, rng.random(24) < 0.5)
    B1 = reg.refine_by_set(B0, E)
    assert B1.m <= 2 * B0.m
    assert reg.refines(B1, B0) and not reg.refines(reg.Factor.trivial(G), B1)
    for x in range(24):
        for y in range(24):
            same = B1.cell_of[x] == B1.cell_of[y]
            assert same == (B0.cell_of[x] == B0.cell_of[y] and (x in E) == (y in E))


def test_pythagoras_examples(rng):
    G = make_group([10])
    E = GSet.from_elements(G, [0, 4, 7])
    B0, B1 = reg.Factor.trivial(G), reg.refine_by_set(reg.Factor.trivial(G), E)
    lhs, rhs = reg.pythagoras_gap(ind(E), B0, B1)
    assert lhs == pytest.approx(0.21, abs=1e-12) and rhs == pytest.approx(0.21, abs=1e-12)
    assert reg.pythagoras_gap(ind(E), B1, B1) == pytest.approx((0.0, 0.0), abs=1e-15)
    G = make_group([36])
    f = GridFunction(G, rng.normal(size=36))
    B = reg.Factor.trivial(G)
    for _ in range(5):
        B2 = reg.refine_by_set(B, GSet.from_bits(G, rng.random(36) < 0.5))
        lhs, rhs = reg.pythagoras_gap(f, B, B2)
        assert abs(lhs - rhs) < 1e-12
        B = B2


def test_pythagoras_needs_refinement():
    G = make_group([4])
    B1 = reg.Factor(G, np.array([0, 0, 1, 1]))
    B2 = reg.Factor(G, np.array([0, 1, 0, 1]))
    with pytest.raises(ValidationError):
        reg.pythagoras_gap(GridFunction(G, np.ones(4)), B1, B2)


# -- characters and level sets ----------------------------------------------


def test_find_large_character_examples(rng):
    G = make_group([101])
    assert reg.find_large_character(character(G, 17) * 0.5, 0.5) == 17
    A = interval(G, 50)
    g = GridFunction(G, A.indicator() - 50 / 101, bounded=True)
    assert reg.find_large_character(g, 0.2) in (1, 100)
    coeffs = np.zeros(101, dtype=complex)
    coeffs[1:] = 0.1 / 101 * np.exp(2j * np.pi * rng.random(100))
    coeffs[7] = 0.9 / 1.2
    planted = inverse_fourier(fourier(GridFunction(G, np.zeros(101))).__class__(G, coeffs))
    planted = GridFunction(G, planted.values / max(1.0, np.abs(planted.values).max()))
    assert reg.find_large_character(planted, 0.3) == 7


def test_find_large_character_precondition():
    G = make_group([16])
    with pytest.raises(ValidationError):
        reg.find_large_character(GridFunction(G, np.zeros(16)), 0.1)


def test_level_set_examples():
    G = make_group([12])
    assert reg.level_set(G, 1, 0.0, 0.25).elements() == [0, 1, 2, 3]
    assert reg.level_set(make_group([10]), 1, 0.9, 0.2).elements() == [0, 1, 9]
    assert reg.level_set(G, 0, 0.95, 0.1) == GSet.full(G)
    assert reg.level_set(G, 0, 0.2, 0.1).card == 0
    with pytest.raises(ValidationError):
        reg.level_set(G, 1, 0.0, 1.5)


@given(st.sampled_from([(12,), (2, 6), (3, 3), (17,)]), st.data())
def test_level_set_matches_phase_definition(factors, data):
    G = make_group(factors)
    gamma = data.draw(st.integers(0, G.order - 1))
    t = data.draw(st.floats(0, 1, exclude_max=True))
    ell = data.draw(st.floats(0.01, 0.9))
    from sumproduct.groups import char_phase

    expected = set()
    for x in range(G.order):
        d = (char_phase(G, gamma, x) - t) % 1.0
        if d <= ell + 1e-12 or d >= 1 - 1e-12:
            expected.add(x)
    got = set(reg.level_set(G, gamma, t, ell).elements())
    # points within float noise of an endpoint may go either way
    k, m = G.character_phase_classes(gamma)
    edge = {x for x in range(G.order) if min(abs((k[x] / m - t) % 1), abs((k[x] / m - t - ell) % 1), abs((t + ell - k[x] / m) % 1), abs((t - k[x] / m) % 1)) < 1e-9}
    assert (got ^ expected) <= edge


def test_best_level_set_beats_grid(rng):
    G = make_group([64])
    g = GridFunction(G, rng.normal(size=64) * 0.3)
    for gamma in (1, 5, 16):
        E, t, corr = reg.best_level_set(g, gamma, 0.1)
        assert E == reg.level_set(G, gamma, t, 0.1)
        grid = [abs(g.values[reg.level_set(G, gamma, s, 0.1).bits].sum()) / 64 for s in np.linspace(0, 1, 2001)[:-1]]
        assert corr >= max(grid) - 1e-12


# -- energy increment and decomposition ------------------------------------


def test_energy_step_on_index_two_subgroup():
    G = make_group([2, 9])
    H = GSet.from_elements(G, [x for x in range(G.order) if G.decode(x)[0] == 0])
    f = ind(H)
    B0 = reg.Factor.trivial(G)
    assert reg.energy(f, B0) == pytest.approx(0.25)
    B1 = reg.energy_increment_step(f, B0, 0.3)
    assert reg.energy(f, B1) == pytest.approx(0.5)
    assert sorted(c.card for c in B1.cells()) == [9, 9]
    with pytest.raises(ValidationError):
        reg.energy_increment_step(GridFunction(G, np.full(18, 0.5)), B0, 0.3)


def test_energy_step_on_interval():
    G = make_group([101])
    f = ind(interval(G, 51))
    B0 = reg.Factor.trivial(G)
    B1 = reg.energy_increment_step(f, B0, 0.25)
    assert reg.energy(f, B1) - reg.energy(f, B0) >= reg.RegularityConfig().c0 * 0.25**8


def test_constant_floors_are_enforced():
    G = make_group([101])
    f = ind(interval(G, 40))
    with pytest.raises(ConstantFloorError) as exc:
        reg.energy_increment_step(f, reg.Factor.trivial(G), 0.25, reg.RegularityConfig(c0=1e12))
    assert exc.value.trace is not None


def test_weak_regularity_examples(rng):
    G = make_group([2, 9])
    H = GSet.from_elements(G, [x for x in range(G.order) if G.decode(x)[0] == 0])
    dec = reg.weak_regularity(ind(H), 0.3)
    assert dec.iterations <= 1 and dec.final_u2 == pytest.approx(0, abs=1e-12)
    assert np.allclose(reg.project(ind(H), dec.factor).values, H.indicator())
    dec = reg.weak_regularity(GridFunction(G, np.full(18, 0.4)), 0.2)
    assert dec.iterations == 0 and dec.factor.m == 1
    G = make_group([257])
    A = GSet.from_bits(G, rng.random(257) < 0.3)
    dec = reg.weak_regularity(ind(A), 0.3)
    assert dec.iterations <= 1 and dec.final_u2 <= 0.3


@pytest.mark.parametrize("p", [101, 211])
@pytest.mark.parametrize("delta", [0.2, 0.3])
def test_weak_regularity_postconditions(p, delta):
    G = make_group([p])
    f = ind(interval(G, int(0.4 * p)))
    cfg = reg.RegularityConfig()
    dec = reg.weak_regularity(f, delta, cfg)
    assert dec.final_u2 <= delta
    assert u2_norm(f - reg.project(f, dec.factor)) == pytest.approx(dec.final_u2)
    assert dec.iterations <= cfg.iteration_cap(delta)
    assert all(b - a >= cfg.c0 * delta**8 for a, b in zip(dec.energy_trace, dec.energy_trace[1:]))
    assert dec.factor.m <= 2**dec.iterations
    back = reg.DecompositionReport.from_record(dec.to_record())
    assert back.factor == dec.factor and back.energy_trace == dec.energy_trace


def test_weak_regularity_input_checks():
    G = make_group([11])
    with pytest.raises(ValidationError):
        reg.weak_regularity(GridFunction(G, np.full(11, 2.0)), 0.2)
    with pytest.raises(ValidationError):
        reg.weak_regularity(GridFunction(G, np.zeros(11)), 0.6)
    f = ind(interval(make_group([101]), 40))
    with pytest.raises(IterationCapExceeded):
        reg.weak_regularity(f, 0.05, reg.RegularityConfig(max_iterations=1))


def test_decomposition_record_tamper_detected():
    G = make_group([101])
    rec = reg.weak_regularity(ind(interval(G, 40)), 0.25).to_record()
    rec["energy_trace"] = list(reversed(rec["energy_trace"]))
    with pytest.raises(InvariantViolation):
        reg.DecompositionReport.from_record(rec)


# -- counting lemma, superset, restriction ------------------------------------


def test_counting_lemma_on_decomposition_residuals():
    for p in (101, 211):
        G = make_group([p])
        f = ind(interval(G, p // 3))
        delta = 0.25
        dec = reg.weak_regularity(f, delta)
        g = f - reg.project(f, dec.factor)
        count, bound = reg.counting_lemma_exceptions(f, g, delta)
        assert count <= bound


def test_delta_eps_constraint():
    reg.check_delta_eps(reg.delta_for_eps(0.125), 0.125)
    assert 2 * math.sqrt(reg.delta_for_eps(0.125)) < 0.125**3
    with pytest.raises(ValidationError):
        reg.check_delta_eps(0.4, 0.1)
    with pytest.raises(ValidationError):
        reg.check_delta_eps(1e-12, 0.5)


def test_structured_superset_subgroup():
    H = mul_subgroup(211, 3)
    A2, rep = reg.structured_superset(H, "1/8", reg.delta_for_eps(0.125))
    assert A2 == H and rep.missing == 0 and rep.spurious == 0


@pytest.mark.parametrize("kind", ["interval", "random"])
def test_structured_superset_defects(kind, rng):
    G = make_group([211])
    A = interval(G, 84) if kind == "interval" else GSet.from_bits(G, rng.random(211) < 0.3)
    eps = 0.125
    A2, rep = reg.structured_superset(A, eps, reg.delta_for_eps(eps))
    assert (A - A2).card == rep.missing <= eps * 211
    assert (popular_sums(A2, eps) - sumset(A, A)).card == rep.spurious <= eps * 211
    assert A2 == reg.dense_cells(A, rep.decomposition.factor, eps)


def test_dense_cells_exact_threshold():
    G = make_group([8])
    B = reg.Factor(G, np.array([0, 0, 0, 0, 1, 1, 1, 1]))
    A = GSet.from_elements(G, [0, 4, 5])
    assert reg.dense_cells(A, B, "1/4").elements() == list(range(8))
    assert reg.dense_cells(A, B, "1/2").elements() == [4, 5, 6, 7]


def test_popular_restrict_examples():
    G = make_group([12])
    A2, rep = reg.popular_restrict(GSet.full(G), "1/4", "1/4")
    assert A2 == GSet.full(G) and rep.removed == []
    coset = GSet.from_elements(G, [1, 4, 7, 10])
    A2, rep = reg.popular_restrict(coset, "1/10", "1/4")
    assert A2 == coset
    G = make_group([101])
    A = GSet.from_elements(G, [*range(10), 50])
    # at threshold 3/101 every sum 50 + a has only 2 representations
    A2, rep = reg.popular_restrict(A, "3/101", "1/4")
    assert rep.removed[0] == 50 and rep.unpopular_remaining == 0
    assert A2.issubset(A)
    assert sumset(A2, A2).issubset(popular_sums(A, "3/101"))


def test_measurability_probe_examples():
    G = make_group([12])
    (pr,) = reg.measurability_probe(GSet.full(G), [10])
    assert pr.truncation_size == 1 and pr.achieved_spectral_l1 == pytest.approx(1.0)
    sub = GSet.from_elements(G, [0, 3, 6, 9])
    (pr,) = reg.measurability_probe(sub, [1e6])
    assert pr.truncation_size == 3 and pr.achieved_l2_error < 1e-9
    assert pr.achieved_spectral_l1 == pytest.approx(1.0)
    G = make_group([101])
    probes = reg.measurability_probe(interval(G, 50), [2, 5, 10])
    ks = [p.truncation_size for p in probes]
    assert ks == sorted(ks) and all(p.reached for p in probes)
    assert all(p.achieved_l2_error <= 1 / p.M for p in probes)
