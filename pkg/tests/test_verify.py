import pytest

from sumproduct import verify


def test_abelian_group_enumeration():
    per_order = {n: len(verify._invariant_chains(n)) for n in [2, 4, 8, 9, 12, 16]}
    assert per_order == {2: 1, 4: 2, 8: 3, 9: 2, 12: 2, 16: 5}
    for chain in verify.abelian_groups(16):
        assert all(b % a == 0 for a, b in zip(chain, chain[1:]))


def test_kneser_exhaustive_small():
    checked, kb, lb = verify.kneser_exhaustive(8)
    assert checked == sum((2**n - 1) * len(verify._invariant_chains(n)) for n in range(2, 9))
    assert kb == 0 and lb == 0


@pytest.mark.parametrize("suite", ["spectral", "groups", "setops", "pythagoras", "counting", "gauss", "falpha"])
def test_fast_suites_pass(suite):
    results = verify.run_suite(suite)
    assert results and all(r.ok for r in results), [r.detail for r in results]


def test_unknown_suite():
    with pytest.raises(KeyError):
        verify.run_suite("nope")
