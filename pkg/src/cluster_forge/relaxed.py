"""Fuzziness-relaxed search for clusterings with more total clusters.

The strict phase loop keeps only extensions achieving the best phase score.
Relaxation keeps everything within `fuzz` of the best, scored by
(n + 1) * clusters + unassigned counties, under which adding one n-county
cluster is worth exactly +1. Branches slightly behind at small cluster
sizes can then catch up with larger clusters later, which is how solutions
with more total clusters (hence fewer county splits) appear.

The survivor set can be large but highly repetitive, so it can be stored
factored: a backbone of clusters common to all solutions plus independent
regions, each with its observed alternative sub-clusterings. Expansion
takes the cross product of region alternatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import InputError
from .feasibility import ProblemSpec
from .graph import CountyGraph
from .solver import (
    Cluster,
    Clustering,
    SolutionSet,
    SolverOptions,
    solve_engine,
)


def relaxed_measure(cluster_count: int, unassigned_counties: int, n: int) -> int:
    """Branch score at phase n: (n + 1) * clusters + unassigned counties."""
    return (n + 1) * cluster_count + unassigned_counties


def relaxed_search(
    graph: CountyGraph,
    spec: ProblemSpec,
    fuzz: int,
    options: SolverOptions | None = None,
) -> SolutionSet:
    """All complete clusterings surviving stage-wise retention within `fuzz`
    of the stage-best score.

    Not guaranteed to contain every maximum-cluster clustering unless fuzz
    is large enough; fuzz 0 reproduces the strict optimal set.
    """
    if fuzz < 0:
        raise InputError(f"fuzz must be non-negative, got {fuzz}")
    partials = solve_engine(graph, spec, fuzz=fuzz, options=options)
    idx = graph.index()
    clusterings = [
        Clustering.from_clusters(
            Cluster(frozenset(idx.ids_of(mask)), d) for mask, d in p.clusters
        )
        for p in partials
    ]
    clusterings.sort(key=lambda c: c.sort_key())
    return SolutionSet(spec, tuple(clusterings), None, fuzz=fuzz)


@dataclass(frozen=True)
class Region:
    """A county set over which solutions disagree, with every observed
    alternative sub-clustering."""

    counties: frozenset[str]
    alternatives: tuple[tuple[Cluster, ...], ...]


@dataclass(frozen=True)
class CompressedSolutionSet:
    """Factored form: clusters shared by all solutions plus independent
    regions whose alternatives multiply out to the original set."""

    spec: ProblemSpec
    backbone: tuple[Cluster, ...]
    regions: tuple[Region, ...]
    solution_count: int
    fuzz: int | None = None

    @property
    def representative_count(self) -> int:
        """How many whole clusterings suffice to cover every alternative."""
        if not self.regions:
            return min(self.solution_count, 1)
        return max(len(r.alternatives) for r in self.regions)


def _merge_sets(groups: list[frozenset[str]]) -> list[frozenset[str]]:
    merged: list[set[str]] = []
    for g in groups:
        acc = set(g)
        rest: list[set[str]] = []
        for m in merged:
            if m & acc:
                acc |= m
            else:
                rest.append(m)
        rest.append(acc)
        merged = rest
    return [frozenset(m) for m in merged]


def _restriction(clustering: Clustering, region: frozenset[str]) -> tuple[Cluster, ...]:
    return tuple(
        sorted(
            (c for c in clustering.clusters if c.counties <= region),
            key=lambda c: c.sort_key(),
        )
    )


def compress_solutions(solutions: SolutionSet) -> CompressedSolutionSet:
    """Factor a solution set into backbone plus independent regions.

    Regions start as the transitive overlaps of non-shared clusters and are
    merged while the observed combinations fail to form a full cross
    product, so expansion always reproduces the input set exactly. The
    fallback is a single region listing each solution's variable part.
    """
    members = solutions.clusterings
    if not members:
        return CompressedSolutionSet(solutions.spec, (), (), 0, solutions.fuzz)
    common = set(members[0].clusters)
    for c in members[1:]:
        common &= set(c.clusters)
    backbone = tuple(sorted(common, key=lambda c: c.sort_key()))
    if len(members) == 1:
        return CompressedSolutionSet(solutions.spec, backbone, (), 1, solutions.fuzz)

    variable_sets: list[frozenset[str]] = []
    for m in members:
        for c in m.clusters:
            if c not in common:
                variable_sets.append(c.counties)
    regions = sorted(_merge_sets(variable_sets), key=min)

    def factored(region_list: list[frozenset[str]]) -> tuple[Region, ...] | None:
        alts: list[dict[tuple[Cluster, ...], int]] = []
        keys: list[tuple[int, ...]] = []
        for r in region_list:
            alts.append({})
        for m in members:
            key = []
            for i, r in enumerate(region_list):
                rest = _restriction(m, r)
                if rest not in alts[i]:
                    alts[i][rest] = len(alts[i])
                key.append(alts[i][rest])
            keys.append(tuple(key))
        product = 1
        for a in alts:
            product *= len(a)
        if product != len(set(keys)) or product != len(members):
            return None
        return tuple(
            Region(r, tuple(sorted(a, key=lambda alt: tuple(c.sort_key() for c in alt))))
            for r, a in zip(region_list, alts)
        )

    current = list(regions)
    while True:
        result = factored(current)
        if result is not None:
            return CompressedSolutionSet(
                solutions.spec, backbone, result, len(members), solutions.fuzz
            )
        if len(current) == 1:
            # cannot happen: a single region always factors; guard regardless
            break
        merged = _merge_dependent_pair(current, members)
        if merged is None:
            current = [frozenset().union(*current)]
        else:
            current = merged
    result = factored(current)
    assert result is not None
    return CompressedSolutionSet(solutions.spec, backbone, result, len(members), solutions.fuzz)


def _merge_dependent_pair(
    regions: list[frozenset[str]], members: tuple[Clustering, ...]
) -> list[frozenset[str]] | None:
    """Merge the first region pair whose observed combinations are not a
    full cross product; None when all pairs look independent."""
    n = len(regions)
    for i in range(n):
        for j in range(i + 1, n):
            seen_i: set[tuple[Cluster, ...]] = set()
            seen_j: set[tuple[Cluster, ...]] = set()
            seen_ij: set[tuple[tuple[Cluster, ...], tuple[Cluster, ...]]] = set()
            for m in members:
                ri = _restriction(m, regions[i])
                rj = _restriction(m, regions[j])
                seen_i.add(ri)
                seen_j.add(rj)
                seen_ij.add((ri, rj))
            if len(seen_ij) != len(seen_i) * len(seen_j):
                merged = regions[i] | regions[j]
                return (
                    regions[:i] + [merged] + regions[i + 1 : j] + regions[j + 1 :]
                )
    return None


def expand_solutions(
    compressed: CompressedSolutionSet,
    graph: CountyGraph | None = None,
) -> SolutionSet:
    """Cross-combine region alternatives back into the full solution set.

    When a graph is given, every expanded clustering is validated against
    it; combinations violating the clustering invariants are rejected with
    an InputError since a well-formed compressed set cannot produce them.
    """
    if compressed.solution_count == 0:
        return SolutionSet(compressed.spec, (), None, fuzz=compressed.fuzz)
    combos: list[tuple[Cluster, ...]] = [compressed.backbone]
    for region in compressed.regions:
        combos = [
            existing + alt for existing in combos for alt in region.alternatives
        ]
    clusterings = [Clustering.from_clusters(c) for c in combos]
    if graph is not None:
        from .solver import validate_clustering

        for c in clusterings:
            problems = validate_clustering(c, graph, compressed.spec)
            if problems:
                raise InputError(
                    "compressed set expands to an invalid clustering: "
                    + "; ".join(problems)
                )
    clusterings.sort(key=lambda c: c.sort_key())
    if len(clusterings) != compressed.solution_count:
        raise InputError(
            f"compressed set expands to {len(clusterings)} clusterings, "
            f"expected {compressed.solution_count}"
        )
    signature: tuple[int, ...] | None = None
    if compressed.fuzz is None and clusterings:
        sigs = {c.signature() for c in clusterings}
        if len(sigs) == 1:
            signature = sigs.pop()
    return SolutionSet(compressed.spec, tuple(clusterings), signature, fuzz=compressed.fuzz)
