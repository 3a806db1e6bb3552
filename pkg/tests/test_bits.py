"""Bit-engine tests.

Every fast-path operation in leantrie.bits is checked against a naive
per-branch loop oracle that decodes the 32 two-bit groups one at a time.
The oracles deliberately share no code with the implementation.
"""

import random

import pytest
from hypothesis import given, strategies as st

from leantrie.bits import (
    EMPTY,
    NODE,
    INLINE,
    COLLECTION,
    EVEN_BITS,
    branch_mask,
    get_pattern,
    set_pattern,
    filter_pattern,
    index_in_category,
    histogram,
    recover_single,
    derive_logical_views,
    pack_patterns,
)

PATTERNS = (EMPTY, NODE, INLINE, COLLECTION)

words = st.integers(min_value=0, max_value=(1 << 64) - 1)
branches = st.integers(min_value=0, max_value=31)
patterns = st.sampled_from(PATTERNS)


# --- naive oracles ---------------------------------------------------------


def oracle_groups(bm):
    """Decode the 32 two-bit groups of a bitmap, branch 0 first."""
    return [(bm >> (2 * b)) & 0b11 for b in range(32)]


def oracle_filter(bm, pattern):
    out = 0
    for b, g in enumerate(oracle_groups(bm)):
        if g == pattern:
            out |= 1 << (2 * b)
    return out


def oracle_histogram(bm):
    counts = [0, 0, 0, 0]
    for g in oracle_groups(bm):
        counts[g] += 1
    return counts


def oracle_index(bm, pattern, branch):
    return sum(1 for g in oracle_groups(bm)[:branch] if g == pattern)


def oracle_set(bm, branch, pattern):
    groups = oracle_groups(bm)
    groups[branch] = pattern
    out = 0
    for b, g in enumerate(groups):
        out |= g << (2 * b)
    return out


def oracle_recover(bm):
    found = [(b, g) for b, g in enumerate(oracle_groups(bm)) if g != EMPTY]
    assert len(found) == 1, "precondition: exactly one non-empty group"
    return found[0]


# --- frozen examples -------------------------------------------------------


def test_branch_mask_examples():
    assert branch_mask(0b101010, 0) == 10
    assert branch_mask(0b101010, 5) == 1


def test_branch_mask_last_level_stays_in_bounds():
    rng = random.Random(0)
    for _ in range(1000):
        h = rng.getrandbits(32)
        assert branch_mask(h, 30) <= 3


def test_get_pattern_examples():
    assert get_pattern(0b10_11_01, 0) == NODE
    assert get_pattern(0b10_11_01, 2) == INLINE
    assert get_pattern(0b10_11_01, 1) == COLLECTION
    assert get_pattern(0b10_11_01, 3) == EMPTY


def test_set_pattern_examples():
    assert set_pattern(0, 0, COLLECTION) == 0b11
    assert set_pattern(0b11, 0, EMPTY) == 0
    assert set_pattern(0, 2, INLINE) == 0b10_00_00


def test_filter_examples():
    bm = 0b10_11_01
    assert filter_pattern(bm, NODE) == 0b1
    assert filter_pattern(bm, COLLECTION) == 0b100
    assert filter_pattern(bm, INLINE) == 0b10000
    # all remaining branches are empty: even bits 6..62
    assert filter_pattern(bm, EMPTY) == 0x5555555555555540


def test_index_in_category_examples():
    assert index_in_category(0b10_11_01, COLLECTION, 5) == 1
    assert index_in_category(0b10_10_10, INLINE, 2) == 2
    assert index_in_category(0b10_10_10, INLINE, 0) == 0


def test_histogram_examples():
    assert histogram(0) == [32, 0, 0, 0]
    assert histogram(0b10_11_01) == [29, 1, 1, 1]


def test_payload_arity_from_histogram():
    bm = 0b10_11_01
    counts = histogram(bm)
    assert 32 - counts[EMPTY] - counts[NODE] == 2


def test_recover_single_examples():
    assert recover_single(0b01) == (0, NODE)
    assert recover_single(0b11 << 14) == (7, COLLECTION)
    assert recover_single(0b10 << 62) == (31, INLINE)


def test_recover_single_exhaustive_96():
    for b in range(32):
        for p in (NODE, INLINE, COLLECTION):
            bm = p << (2 * b)
            assert recover_single(bm) == (b, p) == oracle_recover(bm)


def test_derive_logical_views_example():
    data_map, node_map, both_map = derive_logical_views(0b0110, 0b0011)
    assert data_map == 0b0001
    assert node_map == 0b0100
    assert both_map == 0b0010


def test_pack_patterns_examples():
    codes = [1, 3, 2] + [0] * 29
    assert pack_patterns(codes, 2) == 0b10_11_01
    assert pack_patterns([5] + [0] * 31, 3) == 0b101


# --- randomized oracle agreement ------------------------------------------


def test_oracle_agreement_randomized():
    rng = random.Random(0xBEEF)
    for _ in range(2000):
        bm = rng.getrandbits(64)
        groups = oracle_groups(bm)
        for p in PATTERNS:
            assert filter_pattern(bm, p) == oracle_filter(bm, p)
        assert histogram(bm) == oracle_histogram(bm)
        b = rng.randrange(32)
        assert get_pattern(bm, b) == groups[b]
        for p in PATTERNS:
            assert index_in_category(bm, p, b) == oracle_index(bm, p, b)
            assert set_pattern(bm, b, p) == oracle_set(bm, b, p)


@given(words, branches, patterns)
def test_set_then_get_roundtrip(bm, b, p):
    assert get_pattern(set_pattern(bm, b, p), b) == p


@given(words, branches, patterns)
def test_set_pattern_touches_only_its_group(bm, b, p):
    out = set_pattern(bm, b, p)
    cleared = ~(0b11 << (2 * b))
    assert out & cleared == bm & cleared


@given(words)
def test_filters_partition_the_even_bits(bm):
    union = 0
    for p in PATTERNS:
        f = filter_pattern(bm, p)
        assert union & f == 0  # pairwise disjoint
        union |= f
    assert union == EVEN_BITS


@given(words)
def test_histogram_counts_sum_to_32(bm):
    assert sum(histogram(bm)) == 32


@given(words, patterns)
def test_index_is_monotone_in_branch(bm, p):
    last = 0
    for b in range(33):
        cur = index_in_category(bm, p, b) if b < 32 else histogram(bm)[p]
        assert cur >= last
        last = cur


@given(st.integers(min_value=0, max_value=(1 << 32) - 1),
       st.integers(min_value=0, max_value=(1 << 32) - 1))
def test_derived_views_partition_raw_union(raw1, raw2):
    data_map, node_map, both_map = derive_logical_views(raw1, raw2)
    assert data_map & node_map == 0
    assert data_map & both_map == 0
    assert node_map & both_map == 0
    assert data_map | node_map | both_map == raw1 | raw2


@given(st.lists(st.integers(min_value=0, max_value=3), min_size=32, max_size=32))
def test_pack_patterns_matches_set_pattern_chain(codes):
    bm = 0
    for b, c in enumerate(codes):
        bm = set_pattern(bm, b, c)
    assert pack_patterns(codes, 2) == bm


@given(st.lists(st.integers(min_value=0, max_value=7), min_size=1, max_size=32),
       st.sampled_from([3, 4]))
def test_pack_patterns_wider_groups_decode_back(codes, width):
    packed = pack_patterns(codes, width)
    for i, c in enumerate(codes):
        assert (packed >> (width * i)) & ((1 << width) - 1) == c


def test_recover_single_rejects_ambiguous_words():
    with pytest.raises(ValueError):
        recover_single(0)
    with pytest.raises(ValueError):
        recover_single(0b01_01)
