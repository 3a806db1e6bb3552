"""Trie node behavior against an independent dict-of-sets reference model.

The reference model re-implements multimap semantics with plain Python
dicts and sets; the trie must match it for any operation sequence under
any hash function, and every intermediate structure must satisfy the
full invariant set (canonical form, region layout, collision placement,
cached counts).
"""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leantrie import check_invariants, multimap, pmap, pset, structure_stats
from leantrie.bits import COLLECTION, INLINE, NODE
from leantrie.nodes import (
    CollisionNode,
    InvariantError,
    TrieNode,
    fold_hash,
    map_config,
    multimap_config,
    set_config,
    validate_root,
)
from leantrie.storage import GenericStorage, new_storage


class ModelMultiMap:
    """Plain dict-of-sets with the multimap's operation semantics."""

    def __init__(self):
        self.data = {}

    def put(self, k, v):
        self.data.setdefault(k, set()).add(v)

    def remove(self, k, v):
        if k in self.data:
            self.data[k].discard(v)
            if not self.data[k]:
                del self.data[k]

    def remove_key(self, k):
        self.data.pop(k, None)

    @property
    def tuple_count(self):
        return sum(len(s) for s in self.data.values())

    @property
    def key_count(self):
        return len(self.data)

    def as_dict(self):
        return {k: set(s) for k, s in self.data.items()}


def contents(mm):
    return {k: set(mm.get(k)) for k in mm.keys()}


HASHERS = [
    None,
    lambda x: hash(x) % 13,
    lambda x: 0,
    lambda x: hash(x) & 0x3FF,
]
HASHER_IDS = ["default", "mod13", "constant", "ten-bit"]


def apply_ops(ops, key_hash=None, value_hash=None, validate_every=None):
    mm = multimap(key_hash=key_hash, value_hash=value_hash)
    model = ModelMultiMap()
    for i, (op, k, v) in enumerate(ops):
        if op == 0:
            mm = mm.put(k, v)
            model.put(k, v)
        elif op == 1:
            mm = mm.remove(k, v)
            model.remove(k, v)
        else:
            mm = mm.remove_key(k)
            model.remove_key(k)
        if validate_every and i % validate_every == 0:
            check_invariants(mm)
    check_invariants(mm)
    return mm, model


@pytest.mark.parametrize("key_hash", HASHERS, ids=HASHER_IDS)
def test_random_ops_match_reference_model(key_hash):
    rng = random.Random(0x5EED)
    n = 600 if key_hash in (HASHERS[2],) else 2500
    ops = [
        (rng.choices([0, 1, 2], weights=[6, 3, 1])[0], rng.randrange(60), rng.randrange(7))
        for _ in range(n)
    ]
    mm, model = apply_ops(ops, key_hash=key_hash, validate_every=100)
    assert contents(mm) == model.as_dict()
    assert mm.tuple_count == model.tuple_count
    assert mm.key_count == model.key_count


def test_colliding_value_hash_matches_reference_model():
    rng = random.Random(17)
    ops = [
        (rng.choices([0, 1, 2], weights=[6, 3, 1])[0], rng.randrange(30), rng.randrange(10))
        for _ in range(1500)
    ]
    mm, model = apply_ops(
        ops, key_hash=lambda x: hash(x) % 11, value_hash=lambda v: v % 3,
        validate_every=100,
    )
    assert contents(mm) == model.as_dict()


ops_strategy = st.lists(
    st.tuples(
        st.integers(min_value=0, max_value=2),
        st.integers(min_value=0, max_value=25),
        st.integers(min_value=0, max_value=4),
    ),
    max_size=120,
)


@settings(max_examples=60, deadline=None)
@given(ops=ops_strategy)
def test_any_op_sequence_matches_model_default_hash(ops):
    mm, model = apply_ops(ops)
    assert contents(mm) == model.as_dict()
    assert mm.tuple_count == model.tuple_count


@settings(max_examples=40, deadline=None)
@given(ops=ops_strategy)
def test_any_op_sequence_matches_model_colliding_hash(ops):
    mm, model = apply_ops(ops, key_hash=lambda x: hash(x) % 5)
    assert contents(mm) == model.as_dict()
    assert mm.key_count == model.key_count


@settings(max_examples=40, deadline=None)
@given(ops=ops_strategy)
def test_every_intermediate_structure_is_valid(ops):
    apply_ops(ops, key_hash=lambda x: hash(x) % 7, validate_every=1)


# -- canonical form -------------------------------------------------------------


def structurally_equal(a, b):
    return a._root.equals(a._cfg, b._root)


@pytest.mark.parametrize("key_hash", HASHERS, ids=HASHER_IDS)
def test_insertion_order_does_not_change_structure(key_hash):
    rng = random.Random(5)
    pairs = [(k, v) for k in range(30) for v in range(rng.randrange(1, 4))]
    built = multimap(pairs, key_hash=key_hash)
    for _ in range(4):
        rng.shuffle(pairs)
        other = multimap(pairs, key_hash=key_hash)
        check_invariants(other)
        assert built == other
        assert structurally_equal(built, other)


@pytest.mark.parametrize("key_hash", HASHERS, ids=HASHER_IDS)
def test_deleting_extras_restores_the_direct_build(key_hash):
    rng = random.Random(11)
    pairs = [(k, v) for k in range(25) for v in range(rng.randrange(1, 4))]
    extras = [(k, v + 50) for k in range(40) for v in range(2)]
    direct = multimap(pairs, key_hash=key_hash)
    grown = multimap(pairs + extras, key_hash=key_hash)
    assert not structurally_equal(direct, grown)
    shrunk = grown
    order = extras[:]
    rng.shuffle(order)
    for k, v in order:
        shrunk = shrunk.remove(k, v)
    check_invariants(shrunk)
    assert shrunk == direct
    assert structurally_equal(shrunk, direct)


def test_demotion_reverses_promotion_structurally():
    base = multimap([(k, 0) for k in range(12)])
    promoted = base.put(5, 1)  # key 5 now holds a nested two-set
    assert structure_stats(promoted)["collection_entries"] == 1
    demoted = promoted.remove(5, 1)
    check_invariants(demoted)
    assert structure_stats(demoted)["collection_entries"] == 0
    assert structurally_equal(demoted, base)


def test_removing_whole_key_collapses_to_sibling_free_form():
    direct = multimap([(1, 1)])
    grown = multimap([(1, 1), (2, 1), (2, 2), (2, 3)])
    shrunk = grown.remove_key(2)
    check_invariants(shrunk)
    assert structurally_equal(shrunk, direct)


def test_noop_operations_return_the_receiver():
    mm = multimap([("a", 1), ("a", 2), ("b", 3)])
    assert mm.put("a", 1) is mm
    assert mm.put("a", 2) is mm
    assert mm.remove("a", 99) is mm
    assert mm.remove("zzz", 1) is mm
    assert mm.remove_key("zzz") is mm
    m = pmap([("x", 1)])
    assert m.put("x", 1) is m
    assert m.remove("y") is m
    s = pset([4])
    assert s.add(4) is s
    assert s.discard(9) is s


# -- collision buckets ----------------------------------------------------------


def test_full_collision_forms_a_bucket_under_the_root():
    mm = multimap([("A", 1), ("B", 2)], key_hash=lambda k: 42)
    check_invariants(mm)
    stats = structure_stats(mm)
    assert stats["collision_nodes"] == 1
    assert stats["trie_nodes"] == 1  # just the root above the bucket
    assert stats["max_depth"] == 2


def test_bucket_floats_up_when_the_forcing_sibling_leaves():
    # A and B collide on the full 32-bit hash; C shares only the first
    # 5-bit fragment, forcing the bucket one level deeper while present.
    table = {"A": 0b1100001, "B": 0b1100001, "C": 0b0100001}
    mm = multimap([("A", 1), ("B", 2), ("C", 3)], key_hash=table.__getitem__)
    assert structure_stats(mm)["max_depth"] == 3
    shrunk = mm.remove_key("C")
    check_invariants(shrunk)
    assert structure_stats(shrunk)["max_depth"] == 2
    direct = multimap([("A", 1), ("B", 2)], key_hash=table.__getitem__)
    assert structurally_equal(shrunk, direct)


def test_bucket_floats_through_several_chain_levels():
    # A/B collide fully; C shares two fragments (10 bits) before diverging.
    table = {"A": 0b11_00001_00001, "B": 0b11_00001_00001, "C": 0b01_00001_00001}
    mm = multimap([("A", 1), ("B", 2), ("C", 3)], key_hash=table.__getitem__)
    assert structure_stats(mm)["max_depth"] == 4
    shrunk = mm.remove_key("C")
    check_invariants(shrunk)
    assert structure_stats(shrunk)["max_depth"] == 2
    direct = multimap([("A", 1), ("B", 2)], key_hash=table.__getitem__)
    assert structurally_equal(shrunk, direct)


def test_new_hash_lifts_an_existing_bucket_one_level():
    table = {"A": 7, "B": 7, "C": 7 + 32}
    mm = multimap([("A", 1), ("B", 2)], key_hash=table.__getitem__)
    assert structure_stats(mm)["max_depth"] == 2
    grown = mm.put("C", 3)
    check_invariants(grown)
    assert structure_stats(grown)["max_depth"] == 3
    assert contents(grown) == {"A": {1}, "B": {2}, "C": {3}}


def test_bucket_promotes_and_demotes_entries():
    mm = multimap([("A", 1), ("B", 2)], key_hash=lambda k: 3)
    grown = mm.put("A", 9)
    check_invariants(grown)
    assert set(grown.get("A")) == {1, 9}
    assert structure_stats(grown)["collection_entries"] == 1
    back = grown.remove("A", 9)
    check_invariants(back)
    assert structure_stats(back)["collection_entries"] == 0
    assert structurally_equal(back, mm)


def test_bucket_shrinking_to_one_entry_reinlines_into_the_parent():
    table = {"A": 33, "B": 33, "C": 2}
    mm = multimap([("A", 1), ("B", 2), ("C", 3)], key_hash=table.__getitem__)
    assert structure_stats(mm)["collision_nodes"] == 1
    shrunk = mm.remove_key("B")
    check_invariants(shrunk)
    stats = structure_stats(shrunk)
    assert stats["collision_nodes"] == 0
    assert stats["trie_nodes"] == 1
    direct = multimap([("A", 1), ("C", 3)], key_hash=table.__getitem__)
    assert structurally_equal(shrunk, direct)


def test_bucket_region_order_is_irrelevant_to_equality():
    ops = [("A", 1), ("B", 2), ("C", 3)]
    a = multimap(ops, key_hash=lambda k: 9)
    b = multimap(list(reversed(ops)), key_hash=lambda k: 9)
    assert a == b
    assert structurally_equal(a, b)


def test_deep_divergence_terminates_at_the_last_level():
    # hashes differ only in the top two bits: chain runs to shift 30
    table = {"A": 0x3FFFFFFF, "B": 0x7FFFFFFF}
    mm = multimap([("A", 1), ("B", 2)], key_hash=table.__getitem__)
    check_invariants(mm)
    stats = structure_stats(mm)
    assert stats["collision_nodes"] == 0
    assert stats["max_depth"] == 7  # shifts 0..30 inclusive
    assert contents(mm) == {"A": {1}, "B": {2}}


def test_depth_never_exceeds_seven_levels_plus_buckets():
    rng = random.Random(2)
    mm = multimap([(rng.getrandbits(64), 0) for _ in range(3000)])
    check_invariants(mm)
    assert structure_stats(mm)["max_depth"] <= 8


# -- iteration ------------------------------------------------------------------


def test_iteration_is_deterministic_for_equal_structures():
    rng = random.Random(23)
    pairs = [(k, v) for k in range(40) for v in range(rng.randrange(1, 4))]
    a = multimap(pairs)
    shuffled = pairs[:]
    rng.shuffle(shuffled)
    b = multimap(shuffled)
    assert list(a.items()) == list(b.items())
    assert list(a.keys()) == list(b.keys())


def test_iteration_covers_exactly_the_contents():
    rng = random.Random(29)
    ops = [
        (rng.choices([0, 1], weights=[3, 1])[0], rng.randrange(40), rng.randrange(5))
        for _ in range(800)
    ]
    mm, model = apply_ops(ops, key_hash=lambda x: hash(x) % 9)
    seen = {}
    for k, v in mm.items():
        seen.setdefault(k, set()).add(v)
    assert seen == model.as_dict()
    assert sorted(mm.keys()) == sorted(model.data)
    assert len(list(mm.items())) == mm.tuple_count


# -- sets and maps through the shared machinery ----------------------------------


@settings(max_examples=50, deadline=None)
@given(
    ops=st.lists(
        st.tuples(st.booleans(), st.integers(min_value=0, max_value=40)), max_size=150
    )
)
def test_set_ops_match_builtin_set(ops):
    s = pset(element_hash=lambda x: hash(x) % 17)
    model = set()
    for add, x in ops:
        if add:
            s = s.add(x)
            model.add(x)
        else:
            s = s.discard(x)
            model.discard(x)
    check_invariants(s)
    assert set(s) == model
    assert len(s) == len(model)


@settings(max_examples=50, deadline=None)
@given(
    ops=st.lists(
        st.tuples(
            st.booleans(),
            st.integers(min_value=0, max_value=30),
            st.integers(min_value=0, max_value=5),
        ),
        max_size=150,
    )
)
def test_map_ops_match_builtin_dict(ops):
    m = pmap(key_hash=lambda x: hash(x) % 17)
    model = {}
    for put, k, v in ops:
        if put:
            m = m.put(k, v)
            model[k] = v
        else:
            m = m.remove(k)
            model.pop(k, None)
    check_invariants(m)
    assert dict(m.items()) == model


def test_map_put_replaces_without_promotion():
    m = pmap([("k", 1)])
    m = m.put("k", 2)
    assert m["k"] == 2
    assert len(m) == 1
    assert structure_stats(m)["collection_entries"] == 0


# -- validator rejects malformed structures --------------------------------------


def make_leaf(cfg, branch, key, value):
    st_ = new_storage(2, 0, cfg.specialize)
    st_.set(0, key)
    st_.set(1, value)
    return TrieNode(INLINE << (branch << 1), st_)


def test_validator_rejects_single_payload_child():
    cfg = map_config(key_hash=lambda k: k)
    child = make_leaf(cfg, 1, 32, "v")  # hash 32: fragment 0 then 1
    root_st = new_storage(0, 1, True)
    root_st.set(0, child)
    root = TrieNode(NODE << 0, root_st)
    with pytest.raises(InvariantError, match="single payload"):
        validate_root(cfg, root)


def test_validator_rejects_chain_over_a_bucket():
    cfg = map_config(key_hash=lambda k: 0)
    bucket_st = new_storage(4, 0, True)
    for i, (k, v) in enumerate([("a", 1), ("b", 2)]):
        bucket_st.set(2 * i, k)
        bucket_st.set(2 * i + 1, v)
    bucket = CollisionNode(0, 2, bucket_st)
    chain_st = new_storage(0, 1, True)
    chain_st.set(0, bucket)
    chain = TrieNode(NODE << 0, chain_st)
    root_st = new_storage(0, 1, True)
    root_st.set(0, chain)
    root = TrieNode(NODE << 0, root_st)
    with pytest.raises(InvariantError, match="chain node"):
        validate_root(cfg, root)


def test_validator_rejects_wrong_storage_class():
    cfg = map_config(key_hash=lambda k: k)
    st_ = GenericStorage(2)
    st_.set(0, 3)
    st_.set(1, "v")
    root = TrieNode(INLINE << (3 << 1), st_)
    with pytest.raises(InvariantError, match="generic storage"):
        validate_root(cfg, root)


def test_validator_rejects_misplaced_key():
    cfg = map_config(key_hash=lambda k: k)
    root = make_leaf(cfg, 4, 9, "v")  # key 9 belongs on branch 9, not 4
    with pytest.raises(InvariantError, match="wrong branch"):
        validate_root(cfg, root)


def test_validator_rejects_undersized_nested_set():
    cfg = multimap_config(key_hash=lambda k: k, value_hash=lambda v: v)
    vcfg = cfg.value_cfg
    one_st = new_storage(1, 0, True)
    one_st.set(0, 7)
    one_elem_root = TrieNode(INLINE << (7 << 1), one_st)
    st_ = new_storage(0, 2, True)
    st_.set(0, 2)
    st_.set(1, one_elem_root)
    root = TrieNode(COLLECTION << (2 << 1), st_)
    with pytest.raises(InvariantError, match="holds 1 value"):
        validate_root(cfg, root)


def test_validator_rejects_slot_count_mismatch():
    cfg = map_config()
    st_ = new_storage(2, 0, True)
    root = TrieNode(0, st_)  # bitmap says empty, storage says 2 slots
    with pytest.raises(InvariantError, match="slot run"):
        validate_root(cfg, root)


def test_validator_accepts_the_empty_root_and_single_entry_root():
    cfg = map_config(key_hash=lambda k: k)
    assert validate_root(cfg, TrieNode(0, new_storage(0, 0, True))) == (0, 0)
    assert validate_root(cfg, make_leaf(cfg, 5, 5, "v")) == (1, 1)


def test_default_hash_folds_to_32_bits():
    for value in (0, 1, "abc", (1, 2), 2**63, -17):
        h = fold_hash(value)
        assert 0 <= h <= 0xFFFFFFFF


def test_config_widths():
    assert set_config().width == 1
    assert map_config().width == 2
    assert map_config().value_cfg is None
    mc = multimap_config()
    assert mc.width == 2
    assert mc.value_cfg.width == 1
