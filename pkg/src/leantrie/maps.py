"""Public persistent collections over the shared trie node machinery.

All three structures are immutable: update methods return a new instance
that shares unchanged nodes with the receiver, and return the receiver
itself when the operation was a no-op.

* :class:`PersistentSet` -- hash set, ``collections.abc.Set``.
* :class:`PersistentMap` -- hash map, ``collections.abc.Mapping``;
  ``put`` replaces on key equality.
* :class:`PersistentMultiMap` -- the flagship key->set-of-values
  structure.  A key with a single value is stored inline, two slots and
  no nested allocation; the second distinct value promotes the entry to
  a nested persistent set, and deletion back to one value demotes it.

Hash functions are pluggable per structure (``key_hash``, ``value_hash``,
``element_hash``); results are folded onto 32 bits.  ``specialize``
selects exact-arity node storage (the default) versus generic list-backed
storage, which trades memory for one fewer indirection class.
"""

from collections.abc import ItemsView, Mapping, Set, ValuesView

from .bits import INLINE
from .nodes import (
    M32,
    InvariantError,
    count_entries,
    empty_root,
    map_config,
    multimap_config,
    node_stats,
    set_config,
    validate_root,
)

__all__ = [
    "PersistentMap",
    "PersistentMultiMap",
    "PersistentSet",
    "multimap",
    "pmap",
    "pset",
    "check_invariants",
]


class PersistentSet(Set):
    """Immutable hash set with structural sharing.

    Supports the full ``collections.abc.Set`` operator protocol; binary
    operators build new :class:`PersistentSet` instances with the same
    hash function.  Construct with :func:`pset`.
    """

    __slots__ = ("_cfg", "_root", "_size", "_hash_cache")

    def __init__(self, cfg, root, size):
        self._cfg = cfg
        self._root = root
        self._size = size
        self._hash_cache = None

    @classmethod
    def _field_count(cls):
        return 2

    def _from_iterable(self, iterable):
        return _build_set(self._cfg, iterable)

    def add(self, element):
        """Set containing ``element``; self if already present."""
        cfg = self._cfg
        root, delta, _ = self._root.insert(
            cfg, 0, cfg.hasher(element) & M32, element, None
        )
        if root is self._root:
            return self
        size = None if self._size is None else self._size + delta
        return PersistentSet(cfg, root, size)

    def discard(self, element):
        """Set without ``element``; self if it was absent."""
        cfg = self._cfg
        root, delta, _ = self._root.delete(
            cfg, 0, cfg.hasher(element) & M32, element, None, True
        )
        if root is self._root:
            return self
        size = None if self._size is None else self._size + delta
        return PersistentSet(cfg, root, size)

    def remove(self, element):
        """Set without ``element``; raises KeyError if it was absent."""
        result = self.discard(element)
        if result is self:
            raise KeyError(element)
        return result

    def __contains__(self, element):
        cfg = self._cfg
        return self._root.lookup(cfg, 0, cfg.hasher(element) & M32, element) is not None

    def __iter__(self):
        return self._root.iter_entries(self._cfg)

    def __len__(self):
        if self._size is None:
            self._size = count_entries(self._cfg, self._root)
        return self._size

    def __eq__(self, other):
        if self is other:
            return True
        if isinstance(other, PersistentSet) and self._cfg.hasher is other._cfg.hasher:
            return self._root.equals(self._cfg, other._root)
        if isinstance(other, Set):
            return len(self) == len(other) and all(e in other for e in self)
        return NotImplemented

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        if self._hash_cache is None:
            self._hash_cache = self._hash()
        return self._hash_cache

    def __repr__(self):
        return "pset({%s})" % ", ".join(repr(e) for e in self)


class _MapItems(ItemsView):
    __slots__ = ()

    def __iter__(self):
        mapping = self._mapping
        return mapping._root.iter_entries(mapping._cfg)


class _MapValues(ValuesView):
    __slots__ = ()

    def __iter__(self):
        mapping = self._mapping
        return (v for _, v in mapping._root.iter_entries(mapping._cfg))


class PersistentMap(Mapping):
    """Immutable hash map; ``put`` replaces the value on key equality.

    Implements the read side of ``collections.abc.Mapping``.  Construct
    with :func:`pmap`.
    """

    __slots__ = ("_cfg", "_root", "_size")

    def __init__(self, cfg, root, size):
        self._cfg = cfg
        self._root = root
        self._size = size

    @classmethod
    def _field_count(cls):
        return 2

    def put(self, key, value):
        """Map with ``key`` bound to ``value``; self if already bound."""
        cfg = self._cfg
        root, _, kd = self._root.insert(cfg, 0, cfg.hasher(key) & M32, key, value)
        if root is self._root:
            return self
        return PersistentMap(cfg, root, self._size + kd)

    def remove(self, key):
        """Map without ``key``; self if it was absent."""
        cfg = self._cfg
        root, _, kd = self._root.delete(cfg, 0, cfg.hasher(key) & M32, key, None, True)
        if root is self._root:
            return self
        return PersistentMap(cfg, root, self._size + kd)

    def __getitem__(self, key):
        cfg = self._cfg
        found = self._root.lookup(cfg, 0, cfg.hasher(key) & M32, key)
        if found is None:
            raise KeyError(key)
        return found[1]

    def __contains__(self, key):
        cfg = self._cfg
        return self._root.lookup(cfg, 0, cfg.hasher(key) & M32, key) is not None

    def __iter__(self):
        return self._root.iter_keys(self._cfg)

    def __len__(self):
        return self._size

    def items(self):
        return _MapItems(self)

    def values(self):
        return _MapValues(self)

    def __eq__(self, other):
        if self is other:
            return True
        if isinstance(other, PersistentMap) and self._cfg.hasher is other._cfg.hasher:
            return self._root.equals(self._cfg, other._root)
        if isinstance(other, Mapping):
            if len(self) != len(other):
                return False
            for key, value in self.items():
                try:
                    theirs = other[key]
                except KeyError:
                    return False
                if not (value is theirs or value == theirs):
                    return False
            return True
        return NotImplemented

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __repr__(self):
        pairs = ", ".join(f"{k!r}: {v!r}" for k, v in self.items())
        return "pmap({%s})" % pairs


class _EmptyValueView(Set):
    """Value view of an absent multimap key: the empty set."""

    __slots__ = ("_vcfg",)

    def __init__(self, vcfg):
        self._vcfg = vcfg

    def _from_iterable(self, iterable):
        return _build_set(self._vcfg, iterable)

    def __contains__(self, value):
        return False

    def __iter__(self):
        return iter(())

    def __len__(self):
        return 0

    def __repr__(self):
        return "valueview({})"


class _SingletonValueView(Set):
    """Value view of a multimap key bound to exactly one inline value."""

    __slots__ = ("_vcfg", "_value")

    def __init__(self, vcfg, value):
        self._vcfg = vcfg
        self._value = value

    def _from_iterable(self, iterable):
        return _build_set(self._vcfg, iterable)

    def __contains__(self, value):
        return value is self._value or value == self._value

    def __iter__(self):
        yield self._value

    def __len__(self):
        return 1

    def __repr__(self):
        return "valueview({%r})" % (self._value,)


class PersistentMultiMap:
    """Immutable multimap: each key maps to a set of distinct values.

    ``len()`` counts (key, value) tuples; ``key_count`` counts distinct
    keys.  ``get`` returns a set-protocol view of a key's values without
    copying: the empty view, a one-value view over the inline slot, or a
    :class:`PersistentSet` sharing the nested set's nodes.  Construct
    with :func:`multimap`.
    """

    __slots__ = ("_cfg", "_root", "_tuples", "_keys")

    def __init__(self, cfg, root, tuples, keys):
        self._cfg = cfg
        self._root = root
        self._tuples = tuples
        self._keys = keys

    @classmethod
    def _field_count(cls):
        return 3

    @property
    def tuple_count(self):
        return self._tuples

    @property
    def key_count(self):
        return self._keys

    def put(self, key, value):
        """Multimap with ``(key, value)`` present; self if it already was."""
        cfg = self._cfg
        root, td, kd = self._root.insert(cfg, 0, cfg.hasher(key) & M32, key, value)
        if root is self._root:
            return self
        return PersistentMultiMap(cfg, root, self._tuples + td, self._keys + kd)

    def remove(self, key, value):
        """Multimap without ``(key, value)``; self if it was absent."""
        cfg = self._cfg
        root, td, kd = self._root.delete(
            cfg, 0, cfg.hasher(key) & M32, key, value, False
        )
        if root is self._root:
            return self
        return PersistentMultiMap(cfg, root, self._tuples + td, self._keys + kd)

    def remove_key(self, key):
        """Multimap without any tuple for ``key``; self if none existed."""
        cfg = self._cfg
        root, td, kd = self._root.delete(cfg, 0, cfg.hasher(key) & M32, key, None, True)
        if root is self._root:
            return self
        return PersistentMultiMap(cfg, root, self._tuples + td, self._keys + kd)

    def get(self, key):
        """Set-protocol view of the values bound to ``key``."""
        cfg = self._cfg
        found = self._root.lookup(cfg, 0, cfg.hasher(key) & M32, key)
        if found is None:
            return _EmptyValueView(cfg.value_cfg)
        pattern, payload = found
        if pattern == INLINE:
            return _SingletonValueView(cfg.value_cfg, payload)
        return PersistentSet(cfg.value_cfg, payload, None)

    def contains_key(self, key):
        cfg = self._cfg
        return self._root.lookup(cfg, 0, cfg.hasher(key) & M32, key) is not None

    __contains__ = contains_key

    def contains_entry(self, key, value):
        cfg = self._cfg
        found = self._root.lookup(cfg, 0, cfg.hasher(key) & M32, key)
        if found is None:
            return False
        pattern, payload = found
        if pattern == INLINE:
            return payload is value or payload == value
        vcfg = cfg.value_cfg
        return payload.lookup(vcfg, 0, vcfg.hasher(value) & M32, value) is not None

    def keys(self):
        """Iterator over distinct keys."""
        return self._root.iter_keys(self._cfg)

    def items(self):
        """Iterator over (key, value) tuples, flattened."""
        return self._root.iter_entries(self._cfg)

    def __iter__(self):
        return self.keys()

    def __len__(self):
        return self._tuples

    def __bool__(self):
        return self._tuples > 0

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, PersistentMultiMap):
            return NotImplemented
        if self._tuples != other._tuples or self._keys != other._keys:
            return False
        if self._cfg.hasher is other._cfg.hasher and (
            self._cfg.value_cfg.hasher is other._cfg.value_cfg.hasher
        ):
            return self._root.equals(self._cfg, other._root)
        return all(other.contains_entry(k, v) for k, v in self.items())

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    __hash__ = None

    def __repr__(self):
        pairs = ", ".join(f"({k!r}, {v!r})" for k, v in self.items())
        return "multimap([%s])" % pairs


def _build_set(cfg, iterable):
    root = empty_root(cfg)
    size = 0
    for element in iterable:
        root, delta, _ = root.insert(cfg, 0, cfg.hasher(element) & M32, element, None)
        size += delta
    return PersistentSet(cfg, root, size)


def pset(iterable=(), *, element_hash=None, specialize=True):
    """Persistent set of ``iterable``'s elements.

    ``element_hash`` replaces the default hash function; ``specialize``
    selects exact-arity node storage (on by default).
    """
    return _build_set(set_config(element_hash, specialize), iterable)


def pmap(source=(), *, key_hash=None, specialize=True):
    """Persistent map from a mapping or an iterable of (key, value) pairs.

    Later pairs replace earlier ones on key equality.
    """
    cfg = map_config(key_hash, specialize)
    root = empty_root(cfg)
    size = 0
    pairs = source.items() if isinstance(source, Mapping) else source
    for key, value in pairs:
        root, _, kd = root.insert(cfg, 0, cfg.hasher(key) & M32, key, value)
        size += kd
    return PersistentMap(cfg, root, size)


def multimap(source=(), *, key_hash=None, value_hash=None, specialize=True):
    """Persistent multimap from a mapping or an iterable of (key, value)
    pairs.  Duplicate pairs collapse; duplicate keys accumulate values.
    """
    cfg = multimap_config(key_hash, value_hash, specialize)
    root = empty_root(cfg)
    tuples = 0
    keys = 0
    pairs = source.items() if isinstance(source, Mapping) else source
    for key, value in pairs:
        root, td, kd = root.insert(cfg, 0, cfg.hasher(key) & M32, key, value)
        tuples += td
        keys += kd
    return PersistentMultiMap(cfg, root, tuples, keys)


def check_invariants(structure):
    """Validate ``structure``'s trie against every structural invariant
    and recount its sizes; raises ``InvariantError`` on any mismatch.
    Intended for tests and self-checks."""
    if not isinstance(structure, (PersistentMultiMap, PersistentSet, PersistentMap)):
        raise TypeError(f"not a persistent structure: {type(structure).__name__}")
    tuples, keys = validate_root(structure._cfg, structure._root)
    if isinstance(structure, PersistentMultiMap):
        if tuples != structure._tuples or keys != structure._keys:
            raise InvariantError(
                f"cached counts ({structure._tuples}, {structure._keys}) "
                f"!= recounted ({tuples}, {keys})"
            )
    elif isinstance(structure, PersistentSet):
        if structure._size is not None and tuples != structure._size:
            raise InvariantError(
                f"cached size {structure._size} != recounted {tuples}"
            )
    elif tuples != structure._size or keys != structure._size:
        raise InvariantError(
            f"cached size {structure._size} != recounted ({tuples}, {keys})"
        )
    return structure


def structure_stats(structure):
    """Node-level counters for ``structure`` (see ``node_stats``)."""
    return node_stats(structure._cfg, structure._root)
