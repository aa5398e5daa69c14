import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lefthanded.core import InstanceError, gamma, pstar_sup, validate_lll, validate_order
from lefthanded.sequences import (
    adjacency_difference_checker,
    adjacency_difference_checker_naive,
    alon_family,
    beck_family,
    beck_threshold,
    binomial_tail,
    block_repetition_checker,
    block_repetition_checker_naive,
)
from lefthanded.tails import distance_chain_holds

from conftest import brute_conditional_probabilities

bits = st.lists(st.integers(0, 1), max_size=120)
low_entropy_bits = st.lists(st.sampled_from([0, 0, 0, 1]), max_size=120)


# ---------------------------------------------------------------- far-apart repetitions

def test_beck_sizes_own_consecutive_distance_ranges():
    family, _ = beck_family(Fraction(1, 2), threshold=2)
    assert [family.distances(n) for n in range(1, 6)] == [
        range(0), range(0), range(1, 4), range(4, 6), range(6, 8)]
    # every distance up to f(n) is owned by exactly one size no larger than n
    owned = [d for n in range(1, 30) for d in family.distances(n)]
    assert owned == list(range(1, math.floor(Fraction(3, 2) ** 29) + 1))
    for n in range(3, 30):
        ds = family.distances(n)
        assert all(d <= Fraction(3, 2) ** n for d in ds)
        assert all(d > Fraction(3, 2) ** (n - 1) for d in ds if n > 3)


def test_beck_events_use_the_least_size_for_their_distance():
    family, params = beck_family(Fraction(1, 2), threshold=2)
    for hi in range(0, 80):
        for e in family.events_ending_at(hi):
            k, l, n = e.id
            d = l - k
            assert n == min(m for m in range(params.N + 1, 40) if Fraction(3, 2) ** m >= d)
            assert (e.vbl_lo, e.rsp_lo, e.hi) == (k, l, l + n - 1)
            assert e.pstar == Fraction(1, 2 ** n)
            assert e.z == 1 / (Fraction(3, 2) ** n * n ** 3)
    with pytest.raises(InstanceError):
        family.event((0, 5, 3))
    with pytest.raises(InstanceError):
        family.event((0, 3, 4))


@given(low_entropy_bits, st.integers(0, 4))
@settings(max_examples=150)
def test_beck_family_is_clean_exactly_when_the_checker_is(x, N):
    family, params = beck_family(Fraction(1, 2), threshold=N)
    if not x:
        return
    flagged = family.all_bad(family.make_view(x), 0, len(x) - 1)
    assert bool(flagged) == bool(block_repetition_checker(x, params.f, N))


def test_beck_neighbor_count_bound():
    family, params = beck_family(Fraction(1, 2), threshold=2)
    for a in family.events_ending_at(70):
        n0 = a.id[2]
        sizes = {}
        for b in gamma(family, a):
            sizes[b.id[2]] = sizes.get(b.id[2], 0) + 1
        for n, count in sizes.items():
            assert count <= (n + n0) * Fraction(3, 2) ** n


def test_beck_threshold_is_verified_far_past_the_boundary():
    eps = Fraction(1, 2)
    N = beck_threshold(eps)
    ratio = 2 / (2 - eps)
    shrink = 1 - Fraction(1, N - 1)
    for n0 in range(N + 1, N + 1001):
        assert ratio ** n0 * shrink ** (n0 + 1) >= 2 * n0 ** 3
    # the search returns the least passing value plus a margin of two
    assert not distance_chain_holds(ratio, N - 3)


def test_beck_epsilon_range():
    for eps in (0, 1, Fraction(3, 2)):
        with pytest.raises(InstanceError):
            beck_family(eps)


def test_beck_family_passes_core_validators():
    family, params = beck_family(Fraction(1, 2))
    assert validate_order(family, (0, 60)).ok
    report = validate_lll(family, (0, 60))
    assert report.ok and report.witness.ok
    small, _ = beck_family(Fraction(1, 2), threshold=2)
    assert validate_order(small, (0, 24)).ok


@pytest.mark.parametrize("n", range(1, 11))
def test_beck_pstar_is_exact_for_small_sizes(n):
    # threshold 0 at eps = 9/10: f(n) = 1.9^n, every size owns distances shorter than itself
    family, _ = beck_family(Fraction(9, 10), threshold=0)
    for d in family.distances(n)[:3]:
        a = family.event((1, 1 + d, n))
        assert pstar_sup(family, a) == a.pstar == Fraction(1, 2 ** n)
        assert set(brute_conditional_probabilities(family, a).values()) == {a.pstar}


def test_beck_checker_examples():
    f = lambda n: Fraction(3, 2) ** n
    assert block_repetition_checker([0] * 40, f, 3)
    assert block_repetition_checker([0, 1, 1], f, 5) == []


@given(bits, st.integers(0, 4))
@settings(max_examples=150)
def test_repetition_checker_matches_naive_scan(x, N):
    f = lambda n: Fraction(3, 2) ** n
    assert block_repetition_checker(x, f, N) == block_repetition_checker_naive(x, f, N)


@given(low_entropy_bits, st.integers(0, 4))
@settings(max_examples=150)
def test_repetition_checker_matches_naive_scan_on_repetitive_strings(x, N):
    f = lambda n: Fraction(7, 4) ** n
    assert block_repetition_checker(x, f, N) == block_repetition_checker_naive(x, f, N)


@given(bits, st.integers(0, 60), st.integers(1, 60), st.integers(1, 30))
def test_unequal_blocks_stay_unequal_when_extended(x, k, d, n):
    l = k + d
    if l + n > len(x):
        return
    if x[k:k + n] != x[l:l + n]:
        for m in range(n + 1, len(x) - l + 1):
            assert x[k:k + m] != x[l:l + m]


# ---------------------------------------------------------------- very different adjacent blocks

def test_alon_pstar_example():
    family, _ = alon_family(Fraction(1, 8), threshold=0)
    e = family.event((0, 4))
    assert family.params.share_threshold(4) == 3
    assert e.pstar == Fraction(math.comb(4, 3) + math.comb(4, 4), 2 ** 4) == Fraction(5, 16)


@pytest.mark.parametrize("n", range(1, 11))
def test_alon_pstar_equals_the_exhaustive_supremum(n):
    family, _ = alon_family(Fraction(1, 8), threshold=0)
    a = family.event((1, n))
    assert pstar_sup(family, a) == a.pstar


@pytest.mark.parametrize("n", range(1, 7))
def test_alon_conditional_probability_is_the_same_for_every_prefix(n):
    family, _ = alon_family(Fraction(1, 8), threshold=0)
    a = family.event((0, n))
    assert set(brute_conditional_probabilities(family, a).values()) == {a.pstar}


def test_alon_rsp_avoids_the_first_block():
    family, _ = alon_family(Fraction(1, 8), threshold=0)
    for k in range(5):
        for n in range(1, 12):
            e = family.event((k, n))
            assert set(e.rsp).isdisjoint(range(k, k + n))


def test_binomial_tail_matches_direct_count():
    for n in range(0, 12):
        for t in range(-1, n + 2):
            direct = sum(1 for m in range(2 ** n) if bin(m).count("1") >= t)
            assert binomial_tail(n, t) == Fraction(direct, 2 ** n)


def test_alon_family_passes_core_validators():
    family, params = alon_family(Fraction(1, 8))
    report = validate_lll(family, (0, 200))
    assert report.witness.ok and report.ok
    small, _ = alon_family(Fraction(1, 8), threshold=2)
    assert validate_order(small, (0, 40)).ok


def test_alon_epsilon_range():
    for eps in (0, Fraction(1, 2), 1):
        with pytest.raises(InstanceError):
            alon_family(eps)


def test_adjacency_checker_examples():
    periodic = [0, 1] * 20
    hits = adjacency_difference_checker(periodic, Fraction(3, 8), 1)
    expected = [(k, n) for n in range(2, 21) if n % 2 == 0 for k in range(40 - 2 * n + 1)]
    assert set(expected) <= set(hits)
    assert adjacency_difference_checker(periodic, 0, 0) == []


@given(bits, st.fractions(0, 1), st.integers(0, 6))
@settings(max_examples=150)
def test_adjacency_checker_matches_naive_scan(x, frac, N):
    assert adjacency_difference_checker(x, frac, N) == adjacency_difference_checker_naive(x, frac, N)
