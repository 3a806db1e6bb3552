"""Control-flow dominator analysis driven by the persistent multimap.

The predecessor relation and the dominator sets are both held in
:class:`~leantrie.PersistentMultiMap` instances; the fixpoint
iteration exercises multimap construction, per-key set views, and
set-intersection over those views.

Graphs are ingested from an edge-list format::

    # comment
    entry A
    A B
    B C

The first non-comment line declares the entry vertex; every following
line is one ``src dst`` edge.  Vertices receive dense indices in
first-seen order; duplicate edge lines collapse.  A seeded random
control-flow-graph generator (out-degree at most 2, every vertex
reachable) stands in for real compiler corpora.
"""

import csv
import json
import random
import statistics
import warnings
from dataclasses import dataclass
from time import perf_counter_ns

from .maps import multimap
from .storage import DEFAULT_MODEL

DOMINATOR_COLUMNS = (
    "graph_name",
    "vertices",
    "edges",
    "dom_iterations",
    "runtime_ns",
    "preds_keys",
    "preds_tuples",
    "preds_pct_1to1",
)


class GraphError(ValueError):
    """Malformed edge-list input; message carries the line number."""


@dataclass(frozen=True)
class CfgGraph:
    """Directed graph with dense integer vertices and one entry vertex."""

    name: str
    entry: int
    vertex_names: tuple
    edges: tuple

    @property
    def vertex_count(self):
        return len(self.vertex_names)

    @property
    def edge_count(self):
        return len(self.edges)


@dataclass(frozen=True)
class RelationStats:
    key_count: int
    tuple_count: int
    ratio_1to1: float  # percentage of keys with exactly one value


@dataclass(frozen=True)
class DomResult:
    """One analyzed graph: the dominator multimap plus report fields."""

    graph: CfgGraph
    dominators: object  # PersistentMultiMap vertex -> dominator set
    dom_iterations: int
    runtime_ns: int
    preds_stats: RelationStats

    @property
    def graph_name(self):
        return self.graph.name

    @property
    def vertices(self):
        return self.graph.vertex_count

    @property
    def edges(self):
        return self.graph.edge_count

    @property
    def preds_keys(self):
        return self.preds_stats.key_count

    @property
    def preds_tuples(self):
        return self.preds_stats.tuple_count

    @property
    def preds_pct_1to1(self):
        return round(self.preds_stats.ratio_1to1, 2)


def parse_edge_list(text, name="<edges>"):
    """Parse edge-list ``text`` into a :class:`CfgGraph`.

    Raises :class:`GraphError` with the offending line number on
    malformed input or a missing entry declaration.
    """
    entry_name = None
    indices = {}
    order = []
    edges = []
    seen_edges = set()

    def index_of(vertex):
        if vertex not in indices:
            indices[vertex] = len(order)
            order.append(vertex)
        return indices[vertex]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if entry_name is None:
            if len(tokens) != 2 or tokens[0] != "entry":
                raise GraphError(
                    f"{name}:{lineno}: expected 'entry <vertex>', got {raw.strip()!r}"
                )
            entry_name = tokens[1]
            index_of(entry_name)
            continue
        if len(tokens) != 2:
            raise GraphError(
                f"{name}:{lineno}: expected 'src dst', got {raw.strip()!r}"
            )
        edge = (index_of(tokens[0]), index_of(tokens[1]))
        if edge not in seen_edges:
            seen_edges.add(edge)
            edges.append(edge)
    if entry_name is None:
        raise GraphError(f"{name}: missing 'entry <vertex>' declaration")
    return CfgGraph(
        name=name, entry=indices[entry_name], vertex_names=tuple(order), edges=tuple(edges)
    )


def to_edge_text(graph):
    """Serialize ``graph`` back to the edge-list format."""
    names = graph.vertex_names
    lines = [f"entry {names[graph.entry]}"]
    lines.extend(f"{names[s]} {names[d]}" for s, d in graph.edges)
    return "\n".join(lines) + "\n"


def compute_preds(graph):
    """The predecessor relation as a multimap: one (dst, src) per edge."""
    return multimap((d, s) for s, d in graph.edges)


def relation_stats(mm):
    """Key/tuple counts and the percentage of keys with exactly one value
    (100.0 for the empty relation, vacuously)."""
    keys = mm.key_count
    if keys == 0:
        return RelationStats(0, 0, 100.0)
    ones = sum(1 for k in mm.keys() if len(mm.get(k)) == 1)
    return RelationStats(keys, mm.tuple_count, 100.0 * ones / keys)


def _reachable(graph):
    succs = {}
    for s, d in graph.edges:
        succs.setdefault(s, []).append(d)
    seen = {graph.entry}
    stack = [graph.entry]
    while stack:
        v = stack.pop()
        for w in succs.get(v, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen, succs


def _reverse_postorder(graph, succs, reachable):
    order = []
    visited = set()
    stack = [(graph.entry, iter(succs.get(graph.entry, ())))]
    visited.add(graph.entry)
    while stack:
        vertex, children = stack[-1]
        advanced = False
        for child in children:
            if child in reachable and child not in visited:
                visited.add(child)
                stack.append((child, iter(succs.get(child, ()))))
                advanced = True
                break
        if not advanced:
            order.append(vertex)
            stack.pop()
    order.reverse()
    return order


def compute_dominators(graph):
    """Dominator sets of every reachable vertex, as a multimap.

    Iterates Dom(n) = (intersection of Dom(p) over predecessors p) plus
    {n}, from Dom(entry) = {entry}, until stable.  Vertices not yet
    visited stand for the all-reachable set, so the intersection skips
    them; reverse-postorder guarantees a computed predecessor on the
    first pass.  Unreachable vertices are excluded with a warning.
    """
    mm, _ = _dominator_fixpoint(graph)
    return mm


def _dominator_fixpoint(graph):
    if graph.entry >= graph.vertex_count:
        raise GraphError(f"{graph.name}: entry vertex is not in the graph")
    reachable, succs = _reachable(graph)
    if len(reachable) < graph.vertex_count:
        dropped = graph.vertex_count - len(reachable)
        warnings.warn(
            f"{graph.name}: excluded {dropped} unreachable "
            f"vert{'ex' if dropped == 1 else 'ices'}",
            stacklevel=3,
        )
    preds = compute_preds(graph)
    order = _reverse_postorder(graph, succs, reachable)
    entry = graph.entry

    dom = multimap([(entry, entry)])
    iterations = 0
    changed = True
    while changed:
        changed = False
        iterations += 1
        for n in order:
            if n == entry:
                continue
            # stage the big intersection as a set of predecessor Dom sets,
            # folded pairwise; not-yet-computed Doms stand for "all" and
            # drop out of the intersection
            operands = [
                dom.get(p)
                for p in preds.get(n)
                if p in reachable and dom.contains_key(p)
            ]
            acc = operands[0]
            for other in operands[1:]:
                acc = acc & other
            new = acc if n in acc else acc | (n,)
            if dom.contains_key(n) and new == dom.get(n):
                continue
            changed = True
            dom = dom.remove_key(n)
            for d in new:
                dom = dom.put(n, d)
    return dom, iterations


def analyze_graph(graph):
    """Run the full analysis and wrap the report row fields."""
    start = perf_counter_ns()
    dom, iterations = _dominator_fixpoint(graph)
    runtime = perf_counter_ns() - start
    stats = relation_stats(compute_preds(graph))
    return DomResult(
        graph=graph,
        dominators=dom,
        dom_iterations=iterations,
        runtime_ns=runtime,
        preds_stats=stats,
    )


def random_cfg(size, seed, name=None):
    """Seeded random control-flow graph: ``size`` vertices, entry 0,
    everything reachable, out-degree at most 2.

    A spanning structure keeps most vertices single-predecessor (the
    shape compiler CFGs show); roughly one vertex in ten gains a second
    incoming edge (joins, loop back-edges).
    """
    if size < 1:
        raise GraphError("graph size must be at least 1")
    rng = random.Random((seed << 20) ^ size)
    out_degree = [0] * size
    edges = []
    spare = [0]  # vertices that can still grow an out-edge
    for v in range(1, size):
        i = rng.randrange(len(spare))
        parent = spare[i]
        edges.append((parent, v))
        out_degree[parent] += 1
        if out_degree[parent] >= 2:
            spare[i] = spare[-1]
            spare.pop()
        spare.append(v)
    edge_set = set(edges)
    extra_target = max(1, size // 10)
    added = 0
    for _ in range(4 * extra_target):
        if added >= extra_target or not spare:
            break
        u = spare[rng.randrange(len(spare))]
        w = rng.randrange(size)
        if (u, w) in edge_set:
            continue
        edge_set.add((u, w))
        edges.append((u, w))
        out_degree[u] += 1
        if out_degree[u] >= 2:
            spare.remove(u)
        added += 1
    return CfgGraph(
        name=name or f"random-{size}-s{seed}",
        entry=0,
        vertex_names=tuple(f"n{i}" for i in range(size)),
        edges=tuple(edges),
    )


# -- report writers ------------------------------------------------------------------


def write_dominator_csv(results, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(DOMINATOR_COLUMNS)
    for r in results:
        writer.writerow([getattr(r, c) for c in DOMINATOR_COLUMNS])


def write_dominator_json(results, stream, generated_at, config=None, model=DEFAULT_MODEL):
    document = {
        "metadata": {
            "generated_at": generated_at,
            "config": config or {},
            "model": {
                "header_words": model.header_words,
                "bitmap_words": model.bitmap_words,
                "slot_words": model.slot_words,
                "indirection_words": model.indirection_words,
            },
        },
        "rows": [{c: getattr(r, c) for c in DOMINATOR_COLUMNS} for r in results],
    }
    json.dump(document, stream, indent=2)
    stream.write("\n")


def summarize_ratio_1to1(results):
    """Median preds 1:1 percentage across analyzed graphs."""
    return statistics.median(r.preds_pct_1to1 for r in results)
