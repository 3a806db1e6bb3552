"""Quick self-checks: bitmap algebra, model equivalence, canonical shapes,
footprint constants, and the dominator fixpoint, each against a small
independent oracle.  Prints one line per check; returns overall success.
"""

import random

from . import bits
from .bench import run_footprint
from .dominators import CfgGraph, compute_dominators, random_cfg
from .maps import check_invariants, multimap, pmap
from .storage import footprint




def _check_bitmap_algebra(rng):
    for _ in range(5_000):
        bitmap = rng.getrandbits(64)
        groups = [(bitmap >> (2 * b)) & 0b11 for b in range(32)]
        branch = rng.randrange(32)
        for pattern in range(4):
            expect = 0
            for b, g in enumerate(groups):
                if g == pattern:
                    expect |= 1 << (2 * b)
            if bits.filter_pattern(bitmap, pattern) != expect:
                return False
            rank = sum(1 for g in groups[:branch] if g == pattern)
            if bits.index_in_category(bitmap, pattern, branch) != rank:
                return False
        if bits.histogram(bitmap) != [groups.count(p) for p in range(4)]:
            return False
    for branch in range(32):
        for pattern in (1, 2, 3):
            if bits.recover_single(pattern << (2 * branch)) != (branch, pattern):
                return False
    return True


def _random_ops(rng, count, key_space, value_space):
    mm = multimap()
    model = {}
    for _ in range(count):
        key = rng.randrange(key_space)
        value = rng.randrange(value_space)
        if rng.random() < 0.6:
            mm = mm.put(key, value)
            model.setdefault(key, set()).add(value)
        else:
            mm = mm.remove(key, value)
            bucket = model.get(key)
            if bucket is not None:
                bucket.discard(value)
                if not bucket:
                    del model[key]
    return mm, model


def _same_contents(mm, model):
    if mm.key_count != len(model):
        return False
    if mm.tuple_count != sum(len(v) for v in model.values()):
        return False
    return all(set(mm.get(k)) == v for k, v in model.items())


def _check_model_equivalence(rng):
    mm, model = _random_ops(rng, 4_000, key_space=500, value_space=8)
    check_invariants(mm)
    return _same_contents(mm, model)


def _check_canonical_shapes(rng):
    pairs = [(rng.randrange(1 << 30), rng.randrange(4)) for _ in range(300)]
    direct = multimap(sorted(set(pairs)))
    shuffled = list(set(pairs))
    rng.shuffle(shuffled)
    built = multimap(shuffled)
    if not built._root.equals(built._cfg, direct._root):
        return False
    extras = [(rng.randrange(1 << 30), 99) for _ in range(100)]
    grown = built
    for k, v in extras:
        grown = grown.put(k, v)
    for k, v in extras:
        grown = grown.remove(k, v)
    check_invariants(grown)
    return grown._root.equals(grown._cfg, direct._root)


def _check_footprint_constants(_rng):
    if footprint(multimap()).words_total != 3:
        return False
    rows = run_footprint([10])
    ratio = next(r.ratio_vs_baseline for r in rows if r.structure == "multimap")
    return ratio >= 1.5


def _check_one_to_one_degenerate(rng):
    pairs = [(k, rng.randrange(1 << 20)) for k in rng.sample(range(1 << 30), 512)]
    mm = multimap(pairs)
    mp = pmap(pairs)
    check_invariants(mm)
    return footprint(mm).words_total == footprint(mp).words_total


def _check_specialization_opacity(rng):
    pairs = [(rng.randrange(1 << 30), rng.randrange(16)) for _ in range(400)]
    spec_mm = multimap(pairs)
    gen_mm = multimap(pairs, specialize=False)
    if not spec_mm._root.equals(spec_mm._cfg, gen_mm._root):
        return False
    small = [(k, 0) for k in range(4)]
    return (
        footprint(multimap(small)).words_total
        < footprint(multimap(small, specialize=False)).words_total
    )


def _oracle_dominators(graph):
    preds = {}
    for src, dst in graph.edges:
        preds.setdefault(dst, set()).add(src)
    n = graph.vertex_count
    full = (1 << n) - 1
    dom = [full] * n
    dom[graph.entry] = 1 << graph.entry
    changed = True
    while changed:
        changed = False
        for v in range(n):
            if v == graph.entry:
                continue
            acc = full
            for p in preds.get(v, ()):
                acc &= dom[p]
            acc |= 1 << v
            if acc != dom[v]:
                dom[v] = acc
                changed = True
    return {v: {i for i in range(n) if dom[v] >> i & 1} for v in range(n)}


def _reachable_oracle(graph):
    succs = {}
    for src, dst in graph.edges:
        succs.setdefault(src, set()).add(dst)
    seen = {graph.entry}
    stack = [graph.entry]
    while stack:
        for nxt in succs.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _check_dominators(rng):
    diamond = CfgGraph(
        name="diamond", entry=0, vertex_names=("a", "b", "c", "d"),
        edges=((0, 1), (0, 2), (1, 3), (2, 3)),
    )
    dom = compute_dominators(diamond)
    if set(dom.get(3)) != {0, 3} or set(dom.get(1)) != {0, 1}:
        return False
    for _ in range(5):
        graph = random_cfg(48, seed=rng.randrange(1 << 16))
        dom = compute_dominators(graph)
        reachable = _reachable_oracle(graph)
        expect = _oracle_dominators(graph)
        got = {v: set(dom.get(v)) for v in reachable}
        if got != {v: expect[v] for v in reachable}:
            return False
    return True


def _check_collision_torture(rng):
    mm = multimap(key_hash=lambda o: 0, value_hash=lambda o: 0)
    model = {}
    for _ in range(600):
        key = rng.randrange(30)
        value = rng.randrange(6)
        if rng.random() < 0.55:
            mm = mm.put(key, value)
            model.setdefault(key, set()).add(value)
        else:
            mm = mm.remove(key, value)
            bucket = model.get(key)
            if bucket is not None:
                bucket.discard(value)
                if not bucket:
                    del model[key]
    check_invariants(mm)
    return _same_contents(mm, model)


CHECKS = (
    ("bitmap algebra vs per-branch oracle", _check_bitmap_algebra),
    ("multimap matches dict-of-sets model", _check_model_equivalence),
    ("canonical shapes are history-free", _check_canonical_shapes),
    ("footprint constants and lean ratio", _check_footprint_constants),
    ("pure 1:1 multimap prices like a map", _check_one_to_one_degenerate),
    ("specialization is shape-invisible", _check_specialization_opacity),
    ("dominator fixpoint vs bit-vector oracle", _check_dominators),
    ("full-collision torture", _check_collision_torture),
)


def run_selftest(stream=None):
    """Run every quick check; print one status line each; return success."""
    import sys

    stream = stream or sys.stdout
    rng = random.Random(0xC0FFEE)
    ok = True
    for name, check in CHECKS:
        try:
            passed = check(rng)
        except Exception as exc:  # noqa: BLE001 - a crash is a failed check
            print(f"FAIL - {name} ({type(exc).__name__}: {exc})", file=stream)
            ok = False
            continue
        print(("ok - " if passed else "FAIL - ") + name, file=stream)
        ok = ok and passed
    return ok
