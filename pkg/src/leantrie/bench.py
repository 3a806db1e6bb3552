"""Benchmark and footprint harness for the multimap and its baselines.

Workloads are sized in unique keys (2^x), generated deterministically
from a seed with a configurable mix of 1:1 and 1:2 key-to-value
mappings, plus three disjoint 8-probe bursts: full matches (key and
value present), partial matches (key present, value absent — the burst
that exercises promotion), and no matches (key absent).

Three structures are comparable on one dataset:

* ``multimap``     -- :class:`leantrie.PersistentMultiMap`;
* ``map_of_sets``  -- the baseline idiom, a persistent map whose values
  are persistent sets (one nested set per key, even singletons);
* ``map``          -- a plain persistent map, only valid on pure 1:1
  datasets, for overhead comparisons against the multimap.

Every timed cell is preceded by a correctness gate that cross-checks
the structure against a dict-of-sets reference model; timings report
the median and the median absolute deviation in nanoseconds per single
operation.  Footprint rows use the abstract word model and are fully
deterministic.
"""

import csv
import json
import random
import statistics
from dataclasses import dataclass, field
from time import perf_counter_ns

from .maps import multimap, pmap, pset
from .storage import DEFAULT_MODEL, footprint

OPERATIONS = (
    "lookup",
    "insert",
    "delete",
    "lookup_fail",
    "insert_fail",
    "delete_fail",
    "iterate_keys",
    "iterate_entries",
)

STRUCTURES = ("multimap", "map_of_sets", "map")

BENCH_COLUMNS = ("structure", "operation", "size_exponent", "seed", "median_ns", "mad_ns")
FOOTPRINT_COLUMNS = (
    "structure",
    "size_exponent",
    "words_total",
    "nodes",
    "slots",
    "ratio_vs_baseline",
)


class ConfigurationError(ValueError):
    """A workload or suite request that cannot be satisfied."""


class GateError(AssertionError):
    """A correctness gate failed; timing was not attempted."""


@dataclass(frozen=True)
class WorkloadSpec:
    """Workload parameters; sizes are 2^x for each listed exponent."""

    size_exponents: tuple = tuple(range(1, 19))
    seeds: int = 5
    mix: float = 0.5  # fraction of keys with exactly one value
    burst_size: int = 8

    def __post_init__(self):
        if not all(1 <= x <= 23 for x in self.size_exponents):
            raise ConfigurationError("size exponents must lie in [1, 23]")
        if not 0.0 <= self.mix <= 1.0:
            raise ConfigurationError("mix must be a fraction in [0, 1]")
        if self.burst_size < 1:
            raise ConfigurationError("burst size must be positive")
        if self.seeds < 1:
            raise ConfigurationError("need at least one seed")


@dataclass(frozen=True)
class Dataset:
    """One generated workload: entries plus the three probe bursts."""

    size: int
    seed: int
    entries: tuple
    single_keys: tuple
    double_keys: tuple
    full_probes: tuple
    partial_probes: tuple
    none_probes: tuple

    @property
    def key_count(self):
        return self.size

    @property
    def tuple_count(self):
        return len(self.entries)

    @property
    def is_pure_one_to_one(self):
        return not self.double_keys


_KEY_SPACE = 1 << 40
_VALUE_SPACE = 1 << 32


def generate_workload(spec, size, seed):
    """Deterministic dataset of ``size`` unique keys for (spec, size, seed).

    Keys split into ``mix`` 1:1 and the rest 1:2 mappings; the three
    probe bursts are pairwise disjoint, padded by duplication up to
    ``spec.burst_size``.
    """
    if size < 1:
        raise ConfigurationError("size must be at least 1")
    rng = random.Random((seed << 32) ^ size)
    burst = spec.burst_size
    # spare keys beyond `size` feed the no-match burst
    keys = rng.sample(range(_KEY_SPACE), size + burst)
    absent_keys = keys[size:]
    keys = keys[:size]
    n_single = round(size * spec.mix)
    single_keys = tuple(keys[:n_single])
    double_keys = tuple(keys[n_single:])

    entries = []
    values = {}
    for k in single_keys:
        v = rng.randrange(_VALUE_SPACE)
        entries.append((k, v))
        values[k] = (v,)
    for k in double_keys:
        v1, v2 = rng.sample(range(_VALUE_SPACE), 2)
        entries.append((k, v1))
        entries.append((k, v2))
        values[k] = (v1, v2)

    def pad(probes):
        if not probes:
            raise ConfigurationError(
                f"size {size} cannot supply disjoint probe bursts"
            )
        out = list(probes)
        while len(out) < burst:
            out.append(out[len(out) % len(probes)])
        return tuple(out[:burst])

    full = pad([(k, values[k][i % len(values[k])]) for i, k in enumerate(pad(keys))])
    # a value outside the 32-bit value space can never collide with a
    # stored value, keeping the partial burst disjoint from the full one
    partial = pad([(k, _VALUE_SPACE + rng.randrange(1 << 16)) for k in pad(keys)])
    none = pad([(k, rng.randrange(_VALUE_SPACE)) for k in absent_keys])
    return Dataset(
        size=size,
        seed=seed,
        entries=tuple(entries),
        single_keys=single_keys,
        double_keys=double_keys,
        full_probes=full,
        partial_probes=partial,
        none_probes=none,
    )


# -- structure adapters ----------------------------------------------------------


class _MultiMapAdapter:
    name = "multimap"

    def build(self, dataset):
        return multimap(dataset.entries)

    def lookup(self, s, k, v):
        return s.contains_entry(k, v)

    def insert(self, s, k, v):
        return s.put(k, v)

    def delete(self, s, k, v):
        return s.remove(k, v)

    def counts(self, s):
        return s.tuple_count, s.key_count

    def iter_keys_count(self, s):
        return sum(1 for _ in s.keys())

    def iter_entries_count(self, s):
        return sum(1 for _ in s.items())


class _MapOfSetsAdapter:
    name = "map_of_sets"

    def build(self, dataset):
        grouped = {}
        for k, v in dataset.entries:
            grouped.setdefault(k, []).append(v)
        return pmap((k, pset(vs)) for k, vs in grouped.items())

    def lookup(self, s, k, v):
        nested = s.get(k)
        return nested is not None and v in nested

    def insert(self, s, k, v):
        nested = s.get(k)
        if nested is None:
            return s.put(k, pset((v,)))
        return s.put(k, nested.add(v))

    def delete(self, s, k, v):
        nested = s.get(k)
        if nested is None:
            return s
        smaller = nested.discard(v)
        if smaller is nested:
            return s
        if len(smaller) == 0:
            return s.remove(k)
        return s.put(k, smaller)

    def counts(self, s):
        return sum(len(vs) for vs in s.values()), len(s)

    def iter_keys_count(self, s):
        return sum(1 for _ in s)

    def iter_entries_count(self, s):
        return sum(1 for vs in s.values() for _ in vs)


class _MapAdapter:
    name = "map"

    def build(self, dataset):
        if not dataset.is_pure_one_to_one:
            raise ConfigurationError(
                "the plain map baseline requires a pure 1:1 dataset (mix=1.0)"
            )
        return pmap(dataset.entries)

    def lookup(self, s, k, v):
        found = s.get(k, _MISSING)
        return found is not _MISSING and found == v

    def insert(self, s, k, v):
        return s.put(k, v)

    def delete(self, s, k, v):
        if self.lookup(s, k, v):
            return s.remove(k)
        return s

    def counts(self, s):
        return len(s), len(s)

    def iter_keys_count(self, s):
        return sum(1 for _ in s)

    def iter_entries_count(self, s):
        return sum(1 for _ in s.items())


_MISSING = object()

_ADAPTERS = {
    "multimap": _MultiMapAdapter(),
    "map_of_sets": _MapOfSetsAdapter(),
    "map": _MapAdapter(),
}


def _adapter(name):
    try:
        return _ADAPTERS[name]
    except KeyError:
        raise ConfigurationError(f"unknown structure {name!r}") from None


# -- correctness gate --------------------------------------------------------------


def _reference_model(dataset):
    model = {}
    for k, v in dataset.entries:
        model.setdefault(k, set()).add(v)
    return model


def _require(condition, message):
    if not condition:
        raise GateError(message)


def _correctness_gate(adapter, base, dataset):
    model = _reference_model(dataset)
    tuples, keys = adapter.counts(base)
    _require(keys == len(model), f"{adapter.name}: key count {keys} != {len(model)}")
    expected_tuples = (
        len(model) if adapter.name == "map" else sum(len(s) for s in model.values())
    )
    _require(
        tuples == expected_tuples,
        f"{adapter.name}: tuple count {tuples} != {expected_tuples}",
    )
    for k, v in dataset.full_probes:
        _require(v in model.get(k, ()), "dataset: full probe not in the model")
        _require(adapter.lookup(base, k, v), f"{adapter.name}: full-match lookup missed")
    for k, v in dataset.partial_probes:
        _require(
            k in model and v not in model[k], "dataset: partial probe misclassified"
        )
        _require(
            not adapter.lookup(base, k, v),
            f"{adapter.name}: partial-match lookup hit",
        )
    for k, v in dataset.none_probes:
        _require(k not in model, "dataset: no-match probe key is present")
        _require(
            not adapter.lookup(base, k, v), f"{adapter.name}: no-match lookup hit"
        )
    _require(
        adapter.iter_keys_count(base) == keys,
        f"{adapter.name}: key iteration count mismatch",
    )
    _require(
        adapter.iter_entries_count(base) == tuples,
        f"{adapter.name}: entry iteration count mismatch",
    )
    # mutation spot checks on one probe of each class
    k, v = dataset.full_probes[0]
    _require(
        adapter.insert(base, k, v) is base,
        f"{adapter.name}: inserting a present tuple must be a no-op",
    )
    _require(
        not adapter.lookup(adapter.delete(base, k, v), k, v),
        f"{adapter.name}: deleting a present tuple left it visible",
    )
    k, v = dataset.partial_probes[0]
    _require(
        adapter.lookup(adapter.insert(base, k, v), k, v),
        f"{adapter.name}: partial-match insert did not land",
    )
    _require(
        adapter.delete(base, k, v) is base,
        f"{adapter.name}: partial-match delete must be a no-op",
    )
    k, v = dataset.none_probes[0]
    _require(
        adapter.lookup(adapter.insert(base, k, v), k, v),
        f"{adapter.name}: no-match insert did not land",
    )
    _require(
        adapter.delete(base, k, v) is base,
        f"{adapter.name}: no-match delete must be a no-op",
    )


# -- timing -------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    warmup_iterations: int = 10
    measured_iterations: int = 20
    target_iteration_ns: int = 1_000_000

    def __post_init__(self):
        if self.warmup_iterations < 0 or self.measured_iterations < 1:
            raise ConfigurationError("iteration counts out of range")


@dataclass(frozen=True)
class BenchRow:
    structure: str
    operation: str
    size_exponent: int
    seed: int
    median_ns: float
    mad_ns: float


def _op_callables(adapter, base, dataset):
    """The eight timed operations with their per-call probe counts."""
    present = dataset.full_probes + dataset.partial_probes
    absent = dataset.none_probes

    def run_probes(fn, probes):
        def call():
            for k, v in probes:
                fn(base, k, v)

        return call, len(probes)

    return {
        "lookup": run_probes(adapter.lookup, present),
        "insert": run_probes(adapter.insert, present),
        "delete": run_probes(adapter.delete, present),
        "lookup_fail": run_probes(adapter.lookup, absent),
        "insert_fail": run_probes(adapter.insert, absent),
        "delete_fail": run_probes(adapter.delete, absent),
        "iterate_keys": (lambda: adapter.iter_keys_count(base), 1),
        "iterate_entries": (lambda: adapter.iter_entries_count(base), 1),
    }


def _time_callable(call, probes_per_call, config):
    """Median and MAD nanoseconds per probe over the measured iterations."""
    start = perf_counter_ns()
    call()
    once = max(perf_counter_ns() - start, 1)
    repeats = max(1, min(100_000, config.target_iteration_ns // once))
    for _ in range(config.warmup_iterations):
        for _ in range(repeats):
            call()
    samples = []
    for _ in range(config.measured_iterations):
        start = perf_counter_ns()
        for _ in range(repeats):
            call()
        elapsed = perf_counter_ns() - start
        samples.append(elapsed / repeats / probes_per_call)
    med = statistics.median(samples)
    mad = statistics.median(abs(s - med) for s in samples)
    return med, mad


def run_suite(structure, dataset, config=None):
    """Gate, then time all eight operations of ``structure`` on ``dataset``.

    Returns one :class:`BenchRow` per operation.
    """
    config = config or BenchConfig()
    adapter = _adapter(structure)
    base = adapter.build(dataset)
    _correctness_gate(adapter, base, dataset)
    size_exponent = dataset.size.bit_length() - 1
    rows = []
    for operation in OPERATIONS:
        call, probes = _op_callables(adapter, base, dataset)[operation]
        med, mad = _time_callable(call, probes, config)
        rows.append(
            BenchRow(
                structure=structure,
                operation=operation,
                size_exponent=size_exponent,
                seed=dataset.seed,
                median_ns=round(med, 1),
                mad_ns=round(mad, 1),
            )
        )
    return rows


def default_structures(dataset):
    """The structures comparable on ``dataset``: the plain map baseline
    joins only on pure 1:1 data."""
    names = ["multimap", "map_of_sets"]
    if dataset.is_pure_one_to_one:
        names.append("map")
    return names


def run_benchmarks(spec, config=None, structures=None):
    """The full (size x seed x structure) grid of timed suites."""
    config = config or BenchConfig()
    rows = []
    for x in spec.size_exponents:
        for seed in range(spec.seeds):
            dataset = generate_workload(spec, 1 << x, seed)
            names = structures or default_structures(dataset)
            for name in names:
                rows.extend(run_suite(name, dataset, config))
    return rows


# -- footprint comparison -------------------------------------------------------------


@dataclass(frozen=True)
class FootprintRow:
    structure: str
    size_exponent: int
    words_total: int
    nodes: int
    slots: int
    ratio_vs_baseline: float


def run_footprint(size_exponents, mix=0.5, seed=0, model=DEFAULT_MODEL, burst_size=8):
    """Deterministic modeled-word comparison rows, multimap vs baseline.

    ``ratio_vs_baseline`` divides the baseline's total words by the
    structure's own (so the baseline rows carry 1.0).
    """
    spec = WorkloadSpec(
        size_exponents=tuple(size_exponents), mix=mix, burst_size=burst_size
    )
    mm_adapter = _adapter("multimap")
    base_adapter = _adapter("map_of_sets")
    rows = []
    for x in spec.size_exponents:
        dataset = generate_workload(spec, 1 << x, seed)
        mm = mm_adapter.build(dataset)
        baseline = base_adapter.build(dataset)
        _correctness_gate(mm_adapter, mm, dataset)
        _correctness_gate(base_adapter, baseline, dataset)
        mm_report = footprint(mm, model)
        base_report = footprint(baseline, model)
        rows.append(
            FootprintRow(
                structure="multimap",
                size_exponent=x,
                words_total=mm_report.words_total,
                nodes=mm_report.nodes,
                slots=mm_report.slots,
                ratio_vs_baseline=round(base_report.words_total / mm_report.words_total, 4),
            )
        )
        rows.append(
            FootprintRow(
                structure="map_of_sets",
                size_exponent=x,
                words_total=base_report.words_total,
                nodes=base_report.nodes,
                slots=base_report.slots,
                ratio_vs_baseline=1.0,
            )
        )
    return rows


# -- report writers ---------------------------------------------------------------------


def _write_csv(rows, columns, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([getattr(row, c) for c in columns])


def write_bench_csv(rows, stream):
    _write_csv(rows, BENCH_COLUMNS, stream)


def write_footprint_csv(rows, stream):
    _write_csv(rows, FOOTPRINT_COLUMNS, stream)


def _write_json(rows, columns, stream, generated_at, config=None, model=DEFAULT_MODEL):
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
        "rows": [{c: getattr(row, c) for c in columns} for row in rows],
    }
    json.dump(document, stream, indent=2)
    stream.write("\n")


def write_bench_json(rows, stream, generated_at, config=None, model=DEFAULT_MODEL):
    _write_json(rows, BENCH_COLUMNS, stream, generated_at, config, model)


def write_footprint_json(rows, stream, generated_at, config=None, model=DEFAULT_MODEL):
    _write_json(rows, FOOTPRINT_COLUMNS, stream, generated_at, config, model)
