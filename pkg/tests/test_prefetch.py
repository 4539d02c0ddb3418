from fractions import Fraction
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macc import SystemParams, decentralized_prefetch, expected_subfile_fraction
from macc import subsets
from macc.prefetch import PrefetchState, bit_membership, fixed_point_threshold


def _params(M, F, c=4, N=3):
    return SystemParams(c=c, r=2, N=N, K=1, M=M, F=F)


def test_nothing_cached_at_gamma_zero():
    state = decentralized_prefetch(_params(0, 200), seed=1)
    assert (state.masks == 0).all()
    assert len(state.subfile(2, 0)) == 200


def test_everything_cached_at_gamma_one():
    state = decentralized_prefetch(_params(3, 200), seed=1)
    assert (state.masks == 0b1111).all()


def test_fixed_point_threshold():
    assert fixed_point_threshold(0) == 0
    assert fixed_point_threshold(1) is None
    assert fixed_point_threshold(Fraction(1, 2)) == 1 << 63


def test_subfile_sizes_within_three_sigma():
    F = 100_000
    params = _params(1, F)  # gamma = 1/3
    state = decentralized_prefetch(params, seed=7)
    for f in range(1, params.N + 1):
        for S in subsets.power_set(0b1111):
            p = float(expected_subfile_fraction(S, params))
            sigma = sqrt(F * p * (1 - p))
            assert abs(len(state.subfile(f, S)) - F * p) <= 3 * sigma + 1


def test_expected_fractions():
    params = _params(1, 10)
    assert expected_subfile_fraction(0, params) == Fraction(16, 81)
    assert expected_subfile_fraction([1, 2, 3, 4], params) == Fraction(1, 81)


@given(st.integers(1, 8), st.fractions(0, 1))
def test_expected_fractions_sum_to_one(c, gamma):
    params = SystemParams(c=c, r=1, N=gamma.denominator, K=1, M=gamma * gamma.denominator)
    assert sum(expected_subfile_fraction(S, params) for S in range(1 << c)) == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 4), st.integers(0, 2**32))
def test_subfiles_partition_each_file(c, m, seed):
    params = SystemParams(c=c, r=1, N=4, K=1, M=m, F=300)
    state = decentralized_prefetch(params, seed)
    for f in range(1, 5):
        parts = [state.subfile(f, S) for S in range(1 << c)]
        joined = np.sort(np.concatenate(parts))
        assert np.array_equal(joined, np.arange(300))


def test_seeded_determinism():
    params = _params(1, 5000)
    a, b = decentralized_prefetch(params, 3), decentralized_prefetch(params, 3)
    assert a == b and a.checksum() == b.checksum()
    assert decentralized_prefetch(params, 4).checksum() != a.checksum()


def test_single_bit_is_recomputable():
    params = _params(1, 400)
    state = decentralized_prefetch(params, 11)
    for f, b in [(1, 0), (2, 17), (3, 399)]:
        assert bit_membership(params, 11, f, b) == state.masks[f - 1, b]


def test_cache_load_matches_memory_budget():
    F = 20_000
    params = SystemParams(c=4, r=2, N=6, K=1, M=2, F=F)
    state = decentralized_prefetch(params, 5)
    p = float(params.gamma)
    sigma = sqrt(params.N * F * p * (1 - p))
    for j in range(1, 5):
        assert abs(state.bits_in_cache(j) - params.M * F) <= 4 * sigma


@pytest.mark.parametrize("F,seed", [(10, 0), (777, 3)])
def test_serialization_roundtrip(F, seed):
    state = decentralized_prefetch(SystemParams(c=3, r=1, N=2, K=1, M="1/2", F=F), seed)
    back = PrefetchState.loads(state.dumps())
    assert back == state and back.checksum() == state.checksum()


def test_deviation_shrinks_with_file_size():
    worst = []
    for F in (1_000, 10_000, 100_000):
        params = _params(1, F)
        state = decentralized_prefetch(params, 2)
        dev = max(
            abs(len(state.subfile(1, S)) / F - float(expected_subfile_fraction(S, params)))
            for S in range(16)
        )
        worst.append(dev)
        assert dev <= 4 * sqrt(0.25 / F)
    assert worst[2] < worst[0]


def test_symbolic_state_sizes(example):
    _, _, _, state = example
    atom = state.subfile(1, 0b0011)
    assert state.size(atom) == (2, 2)
    view = state.cache_view(0b1100)
    assert not view.covers(1, atom)
    assert view.covers(1, state.subfile(1, 0b0110))
