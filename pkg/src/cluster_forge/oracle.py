"""Brute-force reference implementations for small instances.

These enumerate every valid clustering outright and are used only to certify
the solver, the feasibility decision, and the relaxed search in tests. No
attention is paid to performance beyond the instance-size cap.
"""

from __future__ import annotations

from typing import Iterable

from .errors import InputError
from .feasibility import ProblemSpec, interval_for_pop
from .graph import CountyGraph, iter_bits
from .solver import Cluster, Clustering, SolutionSet, compare_signatures

DEFAULT_CAP = 10


def _check_cap(count: int, cap: int) -> None:
    if count > cap:
        raise InputError(
            f"brute-force oracle limited to {cap} counties, got {count}"
        )


def _contiguous_partitions(idx, mask: int) -> Iterable[tuple[int, ...]]:
    """All partitions of `mask` into connected blocks, each exactly once.

    Blocks are anchored: every block contains the smallest remaining county,
    so a partition is generated in exactly one block order.
    """
    if mask == 0:
        yield ()
        return
    anchor = mask & -mask
    rest_pool = mask & ~anchor
    # connected subsets containing the anchor, any size
    blocks: list[int] = []
    seen: set[int] = set()

    def grow(block: int, pool: int) -> None:
        if block in seen:
            return
        seen.add(block)
        blocks.append(block)
        reach = 0
        for i in iter_bits(block):
            reach |= idx.adj_masks[i]
        reach &= pool & ~block
        for i in iter_bits(reach):
            grow(block | (1 << i), pool)

    grow(anchor, rest_pool)
    for block in blocks:
        for tail in _contiguous_partitions(idx, mask & ~block):
            yield (block,) + tail


def brute_force_all_clusterings(
    graph: CountyGraph,
    spec: ProblemSpec,
    subset: Iterable[str] | None = None,
    districts: int | None = None,
    cap: int = DEFAULT_CAP,
) -> list[Clustering]:
    """Every valid clustering of `subset` into exactly `districts` districts.

    Defaults to the whole graph and the spec's district total. Enumerates
    contiguous partitions, then all district assignments with the right sum.
    """
    idx = graph.index()
    mask = idx.full_mask if subset is None else idx.mask_of(subset)
    d_total = spec.total_districts if districts is None else districts
    _check_cap(mask.bit_count(), cap)
    if d_total < 0:
        return []

    results: list[Clustering] = []
    for blocks in _contiguous_partitions(idx, mask):
        intervals = [interval_for_pop(idx.pop_of(b), spec) for b in blocks]
        if any(lo > hi for lo, hi in intervals):
            continue
        assignments: list[tuple[int, ...]] = []

        def assign(i: int, remaining: int, acc: tuple[int, ...]) -> None:
            if i == len(blocks):
                if remaining == 0:
                    assignments.append(acc)
                return
            lo, hi = intervals[i]
            min_rest = sum(iv[0] for iv in intervals[i + 1 :])
            max_rest = sum(iv[1] for iv in intervals[i + 1 :])
            for d in range(lo, hi + 1):
                if min_rest <= remaining - d <= max_rest:
                    assign(i + 1, remaining - d, acc + (d,))

        assign(0, d_total, ())
        for ds in assignments:
            results.append(
                Clustering.from_clusters(
                    Cluster(frozenset(idx.ids_of(b)), d) for b, d in zip(blocks, ds)
                )
            )
    results.sort(key=lambda c: c.sort_key())
    return results


def brute_force_optimal(
    graph: CountyGraph, spec: ProblemSpec, cap: int = DEFAULT_CAP
) -> SolutionSet:
    """Exact optimal set: keep clusterings no other clustering is preferred over."""
    everything = brute_force_all_clusterings(graph, spec, cap=cap)
    if not everything:
        return SolutionSet(spec, (), None)
    best = everything[0].signature()
    for c in everything[1:]:
        if compare_signatures(c.signature(), best) > 0:
            best = c.signature()
    optimal = tuple(c for c in everything if c.signature() == best)
    return SolutionSet(spec, optimal, best)


def brute_force_max_clusters(
    graph: CountyGraph, spec: ProblemSpec, cap: int = DEFAULT_CAP
) -> SolutionSet:
    """All valid clusterings with the maximum total cluster count."""
    everything = brute_force_all_clusterings(graph, spec, cap=cap)
    if not everything:
        return SolutionSet(spec, (), None, fuzz=None)
    top = max(len(c.clusters) for c in everything)
    kept = tuple(c for c in everything if len(c.clusters) == top)
    return SolutionSet(spec, kept, None, fuzz=None)
