"""Slot storage strategies and the abstract footprint model.

A trie node keeps its payload and sub-node references in one flat run of
slots.  Two storage strategies implement that run:

* ``GenericStorage`` — a list held behind one extra indirection, any size.
* ``Fixed0`` .. ``Fixed8`` — one class per arity with the slots declared as
  instance fields, no out-of-line block.  Chosen through a two-dimensional
  (inline-slots, other-slots) table so the selection mechanism mirrors how
  a code generator would specialize on both arities independently.

Storage instances are mutable only while the owning node is under
construction; after the node is published they must be treated as frozen.

The footprint model prices a structure in abstract machine words: a header
per heap object, one word per bitmap, one per slot cell, and one per
out-of-line storage block.  Payload objects (keys, values) cost nothing —
they are identical across compared structures — except nested leantrie
structures stored as values, which are priced like any other node graph.
"""

from dataclasses import dataclass

MAX_FIXED_SLOTS = 8


@dataclass(frozen=True)
class StorageClass:
    """Selected storage strategy: FixedArity(``arity``) or Generic (None)."""

    arity: int | None = None

    @property
    def is_generic(self):
        return self.arity is None

    def __repr__(self):
        if self.arity is None:
            return "Generic"
        return f"FixedArity({self.arity})"


GENERIC = StorageClass(None)


class GenericStorage:
    __slots__ = ("cells",)
    is_generic = True

    def __init__(self, size):
        self.cells = [None] * size

    def get(self, i):
        return self.cells[i]

    def set(self, i, value):
        self.cells[i] = value

    def __len__(self):
        return len(self.cells)


def _make_fixed(arity):
    fields = tuple(f"c{i}" for i in range(arity))

    def get(self, i, _fields=fields):
        return getattr(self, _fields[i])

    def set(self, i, value, _fields=fields):
        setattr(self, _fields[i], value)

    def length(self):
        return arity

    namespace = {
        "__slots__": fields,
        "_FIELDS": fields,
        "is_generic": False,
        "get": get,
        "set": set,
        "__len__": length,
    }
    return type(f"Fixed{arity}", (), namespace)


FIXED_CLASSES = tuple(_make_fixed(n) for n in range(MAX_FIXED_SLOTS + 1))

# (inline-slots, other-slots) -> storage class; both axes kept explicit even
# though only the total decides, so callers always select through the table.
_SELECTION = tuple(
    tuple(
        StorageClass(t + u) if t + u <= MAX_FIXED_SLOTS else GENERIC
        for u in range(MAX_FIXED_SLOTS + 1)
    )
    for t in range(MAX_FIXED_SLOTS + 1)
)


def select_storage(inline_slots, other_slots):
    """Storage strategy for a node with the given slot-region sizes."""
    if inline_slots <= MAX_FIXED_SLOTS and other_slots <= MAX_FIXED_SLOTS:
        return _SELECTION[inline_slots][other_slots]
    return GENERIC


def new_storage(inline_slots, other_slots, specialize):
    """Allocate an unpublished storage instance for the given region sizes."""
    total = inline_slots + other_slots
    if specialize:
        selected = select_storage(inline_slots, other_slots)
        if not selected.is_generic:
            return FIXED_CLASSES[selected.arity]()
    return GenericStorage(total)


def copy_range(src, src_off, dst, dst_off, n):
    """Copy ``n`` slots from ``src`` into the under-construction ``dst``."""
    if n == 0:
        return
    if src.is_generic and dst.is_generic:
        dst.cells[dst_off : dst_off + n] = src.cells[src_off : src_off + n]
        return
    for i in range(n):
        dst.set(dst_off + i, src.get(src_off + i))


# --- footprint model ---------------------------------------------------------


@dataclass(frozen=True)
class FootprintModel:
    header_words: int = 2
    bitmap_words: int = 1
    slot_words: int = 1
    indirection_words: int = 1


DEFAULT_MODEL = FootprintModel()


@dataclass
class FootprintReport:
    """Word counts per component; ``nodes`` is a heap-object count.

    ``words_total == headers + bitmaps + slots + indirections`` always
    holds.  ``nested_words`` is the share of ``words_total`` contributed by
    structures hanging below payload slots (nested set tries and persistent
    structures stored as values); it is informational and not part of the
    serialized schema.
    """

    words_total: int = 0
    nodes: int = 0
    slots: int = 0
    headers: int = 0
    bitmaps: int = 0
    indirections: int = 0
    nested_words: int = 0

    def as_dict(self):
        return {
            "words_total": self.words_total,
            "nodes": self.nodes,
            "slots": self.slots,
            "headers": self.headers,
            "bitmaps": self.bitmaps,
            "indirections": self.indirections,
        }


def footprint(structures, model=DEFAULT_MODEL):
    """Measure one structure or several jointly (shared nodes counted once).

    Accepts a :class:`~leantrie.PersistentMultiMap`, ``PersistentMap`` or
    ``PersistentSet``, or an iterable of them.  The outermost wrapper
    objects are not priced — the report covers the node graphs — but
    persistent structures stored *as values* are priced in full (object
    header plus one word per field plus their node graph), because there
    they are part of the measured structure's storage overhead.
    """
    from .maps import PersistentMap, PersistentMultiMap, PersistentSet

    wrappers = (PersistentMap, PersistentMultiMap, PersistentSet)
    if isinstance(structures, wrappers):
        structures = [structures]
    else:
        structures = list(structures)
        for s in structures:
            if not isinstance(s, wrappers):
                raise TypeError(f"cannot measure {type(s).__name__}")

    report = FootprintReport()
    seen = set()
    for s in structures:
        _walk_node(s._root, s._cfg.width, model, report, seen)
    report.words_total = (
        report.headers + report.bitmaps + report.slots + report.indirections
    )
    return report


def _walk_node(node, width, model, report, seen):
    """Price a node graph; returns the words newly added for this subtree."""
    from .nodes import CollisionNode, TrieNode

    if id(node) in seen:
        return 0
    seen.add(id(node))

    storage = node.slots
    words = model.header_words + model.bitmap_words + len(storage) * model.slot_words
    report.nodes += 1
    report.headers += model.header_words
    report.bitmaps += model.bitmap_words
    report.slots += len(storage) * model.slot_words
    if storage.is_generic:
        report.indirections += model.indirection_words
        words += model.indirection_words

    if type(node) is TrieNode:
        n_inline, n_coll, n_sub = node.region_counts()
    else:
        assert type(node) is CollisionNode
        n_inline = node.inline_n
        n_coll = (len(storage) - width * n_inline) // 2
        n_sub = 0

    pos = 0
    for _ in range(n_inline):
        value_slot = pos + 1 if width == 2 else pos
        words += _walk_value(storage.get(value_slot), model, report, seen)
        pos += width
    for _ in range(n_coll):
        added = _walk_node(storage.get(pos + 1), 1, model, report, seen)
        report.nested_words += added
        words += added
        pos += 2
    for _ in range(n_sub):
        words += _walk_node(storage.get(pos), width, model, report, seen)
        pos += 1
    return words


def _walk_value(value, model, report, seen):
    """Price a payload slot: zero unless it is a persistent structure."""
    from .maps import PersistentMap, PersistentMultiMap, PersistentSet

    if not isinstance(value, (PersistentMap, PersistentMultiMap, PersistentSet)):
        return 0
    if id(value) in seen:
        return 0
    seen.add(id(value))
    fields = value._field_count()
    words = model.header_words + fields * model.slot_words
    report.nodes += 1
    report.headers += model.header_words
    report.slots += fields * model.slot_words
    words += _walk_node(value._root, value._cfg.width, model, report, seen)
    report.nested_words += words
    return words
