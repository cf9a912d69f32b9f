"""County graph: vertex-weighted adjacency data, CSV ingestion, connectivity."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import InputError


@dataclass(frozen=True)
class County:
    """A single county: stable id (e.g. FIPS string), display name, population."""

    id: str
    name: str
    population: int


@dataclass(frozen=True)
class PopulationSeries:
    """A labeled population snapshot keyed by county id."""

    label: str
    populations: dict[str, int]

    def __post_init__(self) -> None:
        for cid, pop in self.populations.items():
            if pop < 0:
                raise InputError(f"negative population for county {cid!r} in series {self.label!r}")


class CountyGraph:
    """Immutable vertex-weighted adjacency graph of counties.

    Edges are symmetric and irreflexive. All deterministic orderings key on
    the county id string (FIPS codes sort naturally when zero-padded).
    """

    def __init__(self, counties: Iterable[County], edges: Iterable[tuple[str, str]]):
        by_id: dict[str, County] = {}
        for c in counties:
            if c.id in by_id:
                raise InputError(f"duplicate county id {c.id!r}")
            if c.population < 0:
                raise InputError(f"negative population for county {c.id!r}")
            by_id[c.id] = c
        adjacency: dict[str, set[str]] = {cid: set() for cid in by_id}
        edge_set: set[tuple[str, str]] = set()
        for a, b in edges:
            if a == b:
                raise InputError(f"self-loop on county {a!r}")
            for cid in (a, b):
                if cid not in by_id:
                    raise InputError(f"edge references unknown county id {cid!r}")
            key = (a, b) if a < b else (b, a)
            edge_set.add(key)
            adjacency[a].add(b)
            adjacency[b].add(a)
        self._counties: tuple[County, ...] = tuple(sorted(by_id.values(), key=lambda c: c.id))
        self._adjacency: dict[str, frozenset[str]] = {
            cid: frozenset(nbrs) for cid, nbrs in adjacency.items()
        }
        self._edges: frozenset[tuple[str, str]] = frozenset(edge_set)
        self._index: GraphIndex | None = None

    @property
    def counties(self) -> tuple[County, ...]:
        return self._counties

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return self._edges

    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self._counties)

    def county(self, cid: str) -> County:
        for c in self._counties:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def neighbors(self, cid: str) -> frozenset[str]:
        return self._adjacency[cid]

    def population(self, ids: Iterable[str] | None = None) -> int:
        if ids is None:
            return sum(c.population for c in self._counties)
        idx = self.index()
        return sum(idx.pops[idx.pos[cid]] for cid in ids)

    @property
    def total_population(self) -> int:
        return self.population()

    def __len__(self) -> int:
        return len(self._counties)

    def __contains__(self, cid: str) -> bool:
        return cid in self._adjacency

    def with_populations(self, series: PopulationSeries) -> "CountyGraph":
        """A new graph with the same adjacency but this series' populations."""
        if set(series.populations) != set(self._adjacency):
            missing = sorted(set(self._adjacency) - set(series.populations))
            extra = sorted(set(series.populations) - set(self._adjacency))
            raise InputError(
                f"population series {series.label!r} does not match graph county ids"
                f" (missing: {missing[:5]}, extra: {extra[:5]})"
            )
        new_counties = [
            County(c.id, c.name, series.populations[c.id]) for c in self._counties
        ]
        return CountyGraph(new_counties, self._edges)

    def index(self) -> "GraphIndex":
        if self._index is None:
            self._index = GraphIndex(self)
        return self._index


class GraphIndex:
    """Bitmask view of a CountyGraph: county i is bit i in id-sorted order.

    All solver-internal set operations run on Python ints as bitsets.
    """

    def __init__(self, graph: CountyGraph):
        self.graph = graph
        self.ids: tuple[str, ...] = graph.ids()
        self.pos: dict[str, int] = {cid: i for i, cid in enumerate(self.ids)}
        self.pops: tuple[int, ...] = tuple(c.population for c in graph.counties)
        self.adj_masks: list[int] = [0] * len(self.ids)
        for a, b in graph.edges:
            ia, ib = self.pos[a], self.pos[b]
            self.adj_masks[ia] |= 1 << ib
            self.adj_masks[ib] |= 1 << ia
        self.full_mask: int = (1 << len(self.ids)) - 1

    def mask_of(self, ids: Iterable[str]) -> int:
        m = 0
        for cid in ids:
            try:
                m |= 1 << self.pos[cid]
            except KeyError:
                raise InputError(f"unknown county id {cid!r}") from None
        return m

    def ids_of(self, mask: int) -> tuple[str, ...]:
        return tuple(self.ids[i] for i in iter_bits(mask))

    def pop_of(self, mask: int) -> int:
        total = 0
        while mask:
            low = mask & -mask
            total += self.pops[low.bit_length() - 1]
            mask ^= low
        return total

    def components(self, mask: int) -> list[int]:
        """Connected components of the induced subgraph, as masks.

        Ordered by smallest member index, which is the smallest county id.
        """
        comps: list[int] = []
        remaining = mask
        adj = self.adj_masks
        while remaining:
            seed = remaining & -remaining
            comp = seed
            frontier = seed
            while frontier:
                reach = 0
                f = frontier
                while f:
                    low = f & -f
                    reach |= adj[low.bit_length() - 1]
                    f ^= low
                frontier = reach & mask & ~comp
                comp |= frontier
            comps.append(comp)
            remaining &= ~comp
        return comps

    def components_with_pops(self, mask: int) -> list[tuple[int, int]]:
        """Connected components with their populations, one fused walk."""
        comps: list[tuple[int, int]] = []
        remaining = mask
        adj = self.adj_masks
        pops = self.pops
        while remaining:
            frontier = remaining & -remaining
            comp = 0
            pop = 0
            while frontier:
                comp |= frontier
                reach = 0
                f = frontier
                while f:
                    low = f & -f
                    i = low.bit_length() - 1
                    reach |= adj[i]
                    pop += pops[i]
                    f ^= low
                frontier = reach & mask & ~comp
            comps.append((comp, pop))
            remaining &= ~comp
        return comps

    def is_connected(self, mask: int) -> bool:
        if mask == 0:
            return False
        seed = mask & -mask
        comp = seed
        frontier = seed
        adj = self.adj_masks
        while frontier:
            reach = 0
            f = frontier
            while f:
                low = f & -f
                reach |= adj[low.bit_length() - 1]
                f ^= low
            frontier = reach & mask & ~comp
            comp |= frontier
        return comp == mask


def iter_bits(mask: int) -> Iterator[int]:
    """Indices of set bits, ascending."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def connected_components(graph: CountyGraph, subset: Iterable[str]) -> list[frozenset[str]]:
    """Partition `subset` into maximal connected pieces of the induced subgraph.

    Deterministic: components are ordered by their smallest county id.
    An empty subset yields an empty list.
    """
    idx = graph.index()
    mask = idx.mask_of(subset)
    return [frozenset(idx.ids_of(c)) for c in idx.components(mask)]


def is_contiguous(graph: CountyGraph, subset: Iterable[str]) -> bool:
    """True iff the induced subgraph is connected and nonempty."""
    idx = graph.index()
    return idx.is_connected(idx.mask_of(subset))


def _read_csv_rows(text: str, expected_header: list[str], what: str) -> Iterator[tuple[int, list[str]]]:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError(f"{what}: empty input, expected header {','.join(expected_header)}") from None
    header = [h.strip().lstrip("﻿") for h in header]
    if header != expected_header:
        raise InputError(
            f"{what}: bad header {','.join(header)!r}, expected {','.join(expected_header)!r}"
        )
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not field.strip() for field in row):
            continue
        if len(row) != len(expected_header):
            raise InputError(f"{what}: row {lineno}: expected {len(expected_header)} columns, got {len(row)}")
        yield lineno, [field.strip() for field in row]


def parse_counties(text: str) -> list[County]:
    """Parse `id,name,population` CSV into County records.

    Rejects duplicate ids and malformed or negative populations, reporting
    the offending row number.
    """
    counties: list[County] = []
    seen: set[str] = set()
    for lineno, (cid, name, pop_str) in _read_csv_rows(text, ["id", "name", "population"], "counties"):
        if not cid:
            raise InputError(f"counties: row {lineno}: empty id")
        if cid in seen:
            raise InputError(f"counties: row {lineno}: duplicate id {cid!r}")
        try:
            population = int(pop_str, 10)
        except ValueError:
            raise InputError(f"counties: row {lineno}: malformed population {pop_str!r}") from None
        if population < 0:
            raise InputError(f"counties: row {lineno}: negative population {population}")
        seen.add(cid)
        counties.append(County(cid, name, population))
    return counties


def parse_adjacency(
    text: str,
    counties: list[County],
    strict: bool = False,
    warn: "callable | None" = None,
) -> CountyGraph:
    """Parse `id_a,id_b` CSV (each undirected edge once) into a CountyGraph.

    Duplicate edges are a warning by default and an error under strict mode.
    Unknown ids and self-loops are always errors.
    """
    known = {c.id for c in counties}
    edges: list[tuple[str, str]] = []
    seen: set[tuple[str, str]] = set()
    for lineno, (a, b) in _read_csv_rows(text, ["id_a", "id_b"], "adjacency"):
        if a == b:
            raise InputError(f"adjacency: row {lineno}: self-loop on {a!r}")
        for cid in (a, b):
            if cid not in known:
                raise InputError(f"adjacency: row {lineno}: unknown county id {cid!r}")
        key = (a, b) if a < b else (b, a)
        if key in seen:
            if strict:
                raise InputError(f"adjacency: row {lineno}: duplicate edge {a!r},{b!r}")
            if warn is not None:
                warn(f"adjacency: row {lineno}: duplicate edge {a!r},{b!r} (ignored)")
            continue
        seen.add(key)
        edges.append(key)
    return CountyGraph(counties, edges)


def parse_population_series(text: str, label: str) -> PopulationSeries:
    """Parse `id,population` CSV into a labeled PopulationSeries."""
    populations: dict[str, int] = {}
    for lineno, (cid, pop_str) in _read_csv_rows(text, ["id", "population"], f"populations[{label}]"):
        if cid in populations:
            raise InputError(f"populations[{label}]: row {lineno}: duplicate id {cid!r}")
        try:
            population = int(pop_str, 10)
        except ValueError:
            raise InputError(
                f"populations[{label}]: row {lineno}: malformed population {pop_str!r}"
            ) from None
        if population < 0:
            raise InputError(f"populations[{label}]: row {lineno}: negative population {population}")
        populations[cid] = population
    return PopulationSeries(label, populations)


def serialize_counties(counties: Iterable[County]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id", "name", "population"])
    for c in sorted(counties, key=lambda c: c.id):
        writer.writerow([c.id, c.name, str(c.population)])
    return out.getvalue()


def serialize_adjacency(graph: CountyGraph) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id_a", "id_b"])
    for a, b in sorted(graph.edges):
        writer.writerow([a, b])
    return out.getvalue()
