import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ball_points, neighborhood_matrix, points, vulnerable, vulnerable_matrix
from stabvote import (
    BooleanFunction,
    Dictator,
    Majority,
    SubsetMask,
    ThresholdMajority,
    TieWarning,
    ValidationError,
    check_harper,
    half_ball,
    index_of,
    l0_distance,
    make_method,
    neighborhood,
    verify_majority_optimal,
    verify_threshold_optimal,
    vulnerable_count,
)
from stabvote.errors import PreconditionError, TooLargeError


def random_mask(n, rng, size=None):
    cells = 1 << n
    if size is None:
        size = int(rng.integers(0, cells + 1))
    size = min(size, cells)
    bits = np.zeros(cells, dtype=bool)
    bits[rng.choice(cells, size=size, replace=False)] = True
    return SubsetMask.from_bits(bits)


def test_l0_examples():
    assert l0_distance((1, -1), (1, -1)) == 0
    assert l0_distance((1, 1, 1), (-1, -1, -1)) == 3
    assert l0_distance((1, -1, 1, -1), (1, 1, 1, 1)) == 2
    with pytest.raises(ValidationError):
        l0_distance((1, 1), (1, 1, 1))


def test_neighborhood_examples():
    assert len(neighborhood(SubsetMask(4, 0), 3)) == 0
    S = SubsetMask.from_indices(5, [7])
    assert neighborhood(S, 5) == SubsetMask.full(5)
    maj = SubsetMask.where(make_method(Majority(), 3))
    assert len(maj) == 4 and len(neighborhood(maj, 1)) == 7
    with pytest.raises(ValidationError):
        neighborhood(maj, 4)


def test_neighborhood_matches_point_oracle(rng):
    for n in range(1, 7):
        for _ in range(5):
            S = random_mask(n, rng, size=int(rng.integers(0, 4)))
            members = [x for x in points(n) if x in S]
            for k in range(n + 1):
                want = ball_points(members, n, k) if members else set()
                got = neighborhood(S, k)
                assert {x for x in points(n) if x in got} == want


@pytest.mark.parametrize("n", range(1, 11))
def test_neighborhood_matches_matrix_oracle(n):
    rng = np.random.default_rng(n)
    for _ in range(3):
        S = random_mask(n, rng, size=int(rng.integers(1, 6)))
        for k in range(n + 1):
            assert (neighborhood(S, k).bits == neighborhood_matrix(S.bits, k)).all()


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1), st.data())
def test_gamma_properties(n, seed, data):
    rng = np.random.default_rng(seed)
    j = data.draw(st.integers(0, n))
    k = data.draw(st.integers(0, n - j))
    S = random_mask(n, rng, size=int(rng.integers(0, 6)))
    T = SubsetMask(n, S.mask | random_mask(n, rng).mask)
    gs, gt = neighborhood(S, k), neighborhood(T, k)
    assert S.issubset(gs) and gs.issubset(gt)
    assert len(neighborhood(S, min(n, k + 1))) >= len(gs)
    assert neighborhood(S, j + k) == neighborhood(neighborhood(S, k), j)


def test_half_ball_sizes():
    assert [len(half_ball(3, k)) for k in range(4)] == [4, 7, 8, 8]
    for n in (1, 5, 9):
        assert len(half_ball(n, 0)) == 2 ** (n - 1)
        assert half_ball(n, n) == SubsetMask.full(n)


@pytest.mark.parametrize("n", range(1, 13))
def test_half_ball_is_neighborhood_of_b0(n):
    b0 = half_ball(n, 0)
    assert b0 == SubsetMask.from_bits([sum(x) >= 0 for x in (tuple(1 if (i >> j) & 1 else -1 for j in range(n)) for i in range(1 << n))])
    for k in range(n + 1):
        assert half_ball(n, k) == neighborhood(b0, k)


def test_vulnerable_examples():
    assert vulnerable_count(make_method(Dictator(1), 3), 1).vulnerable_count == 8
    rep = vulnerable_count(make_method(Majority(), 3), 1)
    assert rep.vulnerable_count == 6 and rep.per_side == {1: 3, -1: 3}
    for n in (3, 6):
        f = BooleanFunction.random(n, np.random.default_rng(n))
        assert vulnerable_count(f, n).vulnerable_count == 2**n
    with pytest.raises(ValidationError):
        vulnerable_count(make_method(Majority(), 3), 0)
    with pytest.raises(TooLargeError):
        vulnerable_count(make_method(Majority(), 21, dense=False), 1)


def test_vulnerable_matches_flip_search(rng):
    for n in range(1, 6):
        f = BooleanFunction.random(n, rng)
        for k in range(1, n + 1):
            assert vulnerable_count(f, k).vulnerable_count == vulnerable(f, n, k)


@pytest.mark.parametrize("n", range(1, 11))
def test_vulnerable_matches_matrix_oracle(n):
    rng = np.random.default_rng(100 + n)
    fs = [BooleanFunction.random(n, rng), make_method(Majority(), n) if n % 2 else make_method(ThresholdMajority(1), n)]
    for f in fs:
        for k in range(1, n + 1):
            rep = vulnerable_count(f, k)
            assert rep.vulnerable_count == vulnerable_matrix(f.bits, k)
            assert rep.vulnerable_count == rep.per_side[1] + rep.per_side[-1]
            assert 0 <= rep.vulnerable_count <= 2**n


def test_per_side_semantics():
    # f = +1 only at (1,1,1): that point is flippable from +1, its 3 neighbours from -1
    f = make_method(ThresholdMajority(2), 3)
    rep = vulnerable_count(f, 1)
    assert rep.per_side == {1: 1, -1: 3}


def test_harper_examples():
    for n in (3, 6):
        for k in range(n + 1):
            assert check_harper(half_ball(n, k), k)
    assert check_harper(SubsetMask.full(5), 2)
    with pytest.raises(PreconditionError):
        check_harper(SubsetMask.from_indices(4, [0]), 1)


def test_harper_audit(caplog):
    rng = np.random.default_rng(65)
    with caplog.at_level(logging.ERROR):
        for n in range(4, 11):
            for _ in range(1000):
                k = int(rng.integers(0, n + 1))
                low = len(half_ball(n, k))
                S = random_mask(n, rng, size=int(rng.integers(low, (1 << n) + 1)))
                assert check_harper(S, k)
    assert not caplog.records


def test_majority_optimal_n3():
    for k, expect_min in ((1, 6), (2, 8), (3, 8)):
        rep = verify_majority_optimal(3, k)
        assert rep.exhaustive and rep.competitors == 70
        assert rep.optimal and rep.method_count == rep.minimum
        assert sum(rep.distribution.values()) == 70
        maj = make_method(Majority(), 3).table
        assert maj in rep.co_minimizers
        if k == 1:
            assert rep.minimum == expect_min
    rep3 = verify_majority_optimal(3, 3)
    assert rep3.distribution == {8: 70}


def test_majority_optimal_oracle_distribution():
    # independent recount over all balanced functions with the matrix oracle
    from itertools import combinations

    counts = {}
    for combo in combinations(range(8), 4):
        bits = np.zeros(8, dtype=bool)
        bits[list(combo)] = True
        v = vulnerable_matrix(bits, 1)
        counts[v] = counts.get(v, 0) + 1
    assert verify_majority_optimal(3, 1).distribution == dict(sorted(counts.items()))


def test_threshold_optimal():
    rep = verify_threshold_optimal(3, 2, 1)
    assert rep.exhaustive and rep.competitors == 8 and rep.optimal
    rep = verify_threshold_optimal(5, 2, 1, trials=10_000, seed=3)
    assert not rep.exhaustive and rep.competitors == 10_000 and rep.optimal
    with pytest.raises(ValidationError):
        verify_threshold_optimal(5, 1, 1)
    with pytest.warns(TieWarning):
        info = verify_threshold_optimal(5, 1, 1, trials=200, allow_odd_t=True)
    assert not info.asserted


def test_subset_mask_basics():
    S = SubsetMask.from_indices(3, [0, 5])
    assert len(S) == 2
    assert (-1, -1, -1) in S and (1, -1, 1) in S and (1, 1, 1) not in S
    assert index_of((1, -1, 1)) == 5
    with pytest.raises(ValidationError):
        SubsetMask(2, 1 << 4)
    with pytest.raises(TooLargeError):
        SubsetMask(21, 0)
