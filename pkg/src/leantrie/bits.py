"""Two-bit branch patterns packed into a single 64-bit word.

A trie node describes its 32 branches with one 64-bit bitmap holding 32
consecutive 2-bit groups, branch 0 in the lowest bits.  Pattern codes:

    EMPTY      0b00   branch unused
    NODE       0b01   branch holds a sub-node reference
    INLINE     0b10   branch holds a single payload entry, stored inline
    COLLECTION 0b11   branch holds a (key, nested-set) payload entry

The filter trick below turns "which branches carry pattern p" into four
constant-time mask expressions over the even/odd bit planes, so ranking a
branch within its category is two ANDs and a popcount instead of a loop.
"""

EMPTY = 0b00
NODE = 0b01
INLINE = 0b10
COLLECTION = 0b11

EVEN_BITS = 0x5555555555555555
WORD64 = 0xFFFFFFFFFFFFFFFF


def branch_mask(key_hash, shift):
    """5-bit branch fragment of ``key_hash`` at depth ``shift // 5``."""
    return (key_hash >> shift) & 0b11111


def get_pattern(bitmap, branch):
    return (bitmap >> (branch << 1)) & 0b11


def set_pattern(bitmap, branch, pattern):
    offset = branch << 1
    return (bitmap & ~(0b11 << offset) | (pattern << offset)) & WORD64


def filter_pattern(bitmap, pattern):
    """Word with bit ``2*b`` set iff branch ``b`` carries ``pattern``."""
    masked0 = EVEN_BITS & bitmap
    masked1 = EVEN_BITS & (bitmap >> 1)
    if pattern == EMPTY:
        return (masked0 ^ EVEN_BITS) & (masked1 ^ EVEN_BITS)
    if pattern == NODE:
        return masked0 & (masked1 ^ EVEN_BITS)
    if pattern == INLINE:
        return masked1 & (masked0 ^ EVEN_BITS)
    return masked0 & masked1


def index_in_category(bitmap, pattern, branch):
    """Rank of ``branch`` among branches of ``pattern``, in branch order."""
    below = (1 << (branch << 1)) - 1
    return (filter_pattern(bitmap, pattern) & below).bit_count()


def histogram(bitmap):
    """Counts of the four patterns, via the 32-step shift-and-mask loop."""
    counts = [0, 0, 0, 0]
    for _ in range(32):
        counts[bitmap & 0b11] += 1
        bitmap >>= 2
    return counts


def recover_single(bitmap):
    """(branch, pattern) of the only non-empty group in ``bitmap``.

    Rounds the number of trailing zeros down to the 2-bit group boundary.
    """
    if bitmap == 0:
        raise ValueError("bitmap has no non-empty group")
    offset = ((bitmap & -bitmap).bit_length() - 1) // 2 * 2
    pattern = (bitmap >> offset) & 0b11
    if bitmap != pattern << offset:
        raise ValueError("bitmap has more than one non-empty group")
    return offset >> 1, pattern


def derive_logical_views(raw1, raw2):
    """Split two overlaid 1-bit-per-branch words into three disjoint views.

    Returns ``(data_map, node_map, both_map)``: branches set only in
    ``raw2``, only in ``raw1``, and in both, respectively.  This is the
    retrofit used when a structure keeps two raw words instead of one
    2-bit-pattern word; the logical views are recovered on the fly.
    """
    both_map = raw1 & raw2
    data_map = raw2 ^ both_map
    node_map = raw1 ^ both_map
    return data_map, node_map, both_map


def pack_patterns(codes, width):
    """Pack per-branch codes into one word, ``width`` bits per group.

    Generalization oracle for arbitrary group widths; the 2-bit fast paths
    above must agree with it for ``width == 2``.
    """
    if width < 1:
        raise ValueError("width must be >= 1")
    out = 0
    for i, code in enumerate(codes):
        if code >> width:
            raise ValueError(f"code {code!r} does not fit in {width} bits")
        out |= code << (width * i)
    return out
