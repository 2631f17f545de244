import itertools

import pytest

from mspcr.hamming import build_partition, hamming_code
from oracle import hamming_sets


def test_length_three_sets_literal():
    part = build_partition(2)
    assert [set(s) for s in part.sets] == [{0, 7}, {3, 4}, {2, 5}, {1, 6}]
    assert 0 in part.code


@pytest.mark.parametrize("mbar", [2, 3])
def test_partition_matches_oracle(mbar):
    part = build_partition(mbar)
    assert [set(s) for s in part.sets] == hamming_sets(mbar)


@pytest.mark.parametrize("mbar", [2, 3])
def test_partition_property(mbar):
    part = build_partition(mbar)
    n = part.nprime
    assert len(part.sets) == n + 1
    for s, t in itertools.combinations(part.sets, 2):
        assert not s & t
    assert set().union(*part.sets) == set(range(2**n))
    assert all(len(s) == 2 ** (n - mbar) for s in part.sets)
    assert (n + 1) * len(part.code) == 2**n


def test_seven_four_code():
    code = hamming_code(3)
    assert len(code) == 16
    # linear, minimum distance 3
    assert all(x ^ y in code for x in code for y in code)
    assert min(bin(x).count("1") for x in code if x) == 3


@pytest.mark.parametrize("mbar", [2, 3])
def test_translates(mbar):
    part = build_partition(mbar)
    n = part.nprime
    for v in part.code:
        for i in range(n):
            assert v ^ (1 << (n - 1 - i)) in part.sets[part.translate_index(i)]
        for t in range(n):
            flipped = v ^ (1 << t)
            assert part.set_index(flipped) == part.translate_of_bit(t) == n - t
            assert part.set_index(flipped ^ (1 << t)) == 0


def test_translate_index_range():
    part = build_partition(2)
    assert part.translate_index(0) == 1
    with pytest.raises(IndexError):
        part.translate_index(3)
    with pytest.raises(ValueError):
        build_partition(0)


def test_degenerate_single_bit():
    part = build_partition(1)
    assert [set(s) for s in part.sets] == [{0}, {1}]
