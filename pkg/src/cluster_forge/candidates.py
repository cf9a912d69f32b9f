"""Valid n-county cluster enumeration and the two branch-pruning devices.

Connected n-subsets are generated once each by anchored extension: every
subset is grown from its minimum-index county using only higher-index
counties, with already-seen neighbors excluded from re-addition. This gives
a duplicate-free enumeration without hashing large intermediate sets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .feasibility import DistrictInterval, ProblemSpec, interval_for_pop
from .graph import CountyGraph, GraphIndex, iter_bits


@dataclass(frozen=True)
class MaskCandidate:
    """Solver-internal candidate: county bitmask plus its district interval."""

    mask: int
    pop: int
    d_min: int
    d_max: int
    index: int


@dataclass(frozen=True)
class CandidateCluster:
    """A contiguous n-county set with a nonempty district interval."""

    counties: frozenset[str]
    interval: DistrictInterval
    index: int


def connected_subsets(idx: GraphIndex, subset_mask: int, n: int) -> list[int]:
    """All connected n-subsets of the induced subgraph, as masks, sorted.

    Sorted lexicographically by ascending member index tuple, which equals
    lexicographic order of the sorted county-id tuples.
    """
    if n < 1:
        return []
    adj = idx.adj_masks
    out: list[int] = []

    def extend(sub: int, size: int, ext: int, closed: int, allowed: int) -> None:
        if size == n:
            out.append(sub)
            return
        while ext:
            low = ext & -ext
            ext ^= low
            i = low.bit_length() - 1
            grown = adj[i] & allowed & ~closed
            extend(sub | low, size + 1, ext | grown, closed | low | grown, allowed)

    for anchor in iter_bits(subset_mask):
        bit = 1 << anchor
        # only indices above the anchor may extend it, so every subset is
        # grown exactly once, from its minimum member
        allowed = subset_mask & ~((bit << 1) - 1)
        seed_ext = adj[anchor] & allowed
        extend(bit, 1, seed_ext, bit | seed_ext, allowed)

    out.sort(key=lambda m: tuple(iter_bits(m)))
    return out


def enumerate_mask_candidates(
    idx: GraphIndex, spec: ProblemSpec, subset_mask: int, n: int
) -> list[MaskCandidate]:
    """Connected n-subsets whose district interval is nonempty, in canonical order."""
    cands: list[MaskCandidate] = []
    for mask in connected_subsets(idx, subset_mask, n):
        pop = idx.pop_of(mask)
        lo, hi = interval_for_pop(pop, spec)
        if lo <= hi:
            cands.append(MaskCandidate(mask, pop, lo, hi, len(cands)))
    return cands


def enumerate_valid_clusters(
    subset: Iterable[str], n: int, graph: CountyGraph, spec: ProblemSpec
) -> list[CandidateCluster]:
    """All contiguous n-subsets of `subset` that can hold some district count."""
    idx = graph.index()
    return [
        CandidateCluster(frozenset(idx.ids_of(c.mask)), DistrictInterval(c.d_min, c.d_max), c.index)
        for c in enumerate_mask_candidates(idx, spec, idx.mask_of(subset), n)
    ]


def prune_mask_candidates(
    idx: GraphIndex, subset_mask: int, n: int, cands: list[MaskCandidate]
) -> list[MaskCandidate]:
    """Drop candidates confined to a component of size strictly between n and 2n.

    Valid only when no cluster of fewer than n counties can still be formed
    from `subset_mask`: placing an n-cluster inside such a component would
    strand fewer than n counties there for good.
    """
    small = 0
    for comp in idx.components(subset_mask):
        if n < comp.bit_count() < 2 * n:
            small |= comp
    if not small:
        return cands
    # a connected candidate lies entirely within one component, so any
    # overlap with a small component means full containment
    return [c for c in cands if c.mask & small == 0]


def prune_small_components(
    subset: Iterable[str],
    n: int,
    candidates: list[CandidateCluster],
    graph: CountyGraph,
) -> list[CandidateCluster]:
    """Public wrapper of the small-component pruning over id-based candidates."""
    small: set[str] = set()
    for comp in connected_components_sized(graph, subset, n):
        small |= comp
    return [c for c in candidates if not c.counties <= small]


def connected_components_sized(
    graph: CountyGraph, subset: Iterable[str], n: int
) -> list[frozenset[str]]:
    idx = graph.index()
    return [
        frozenset(idx.ids_of(comp))
        for comp in idx.components(idx.mask_of(subset))
        if n < comp.bit_count() < 2 * n
    ]


def merge_overlapping_masks(masks: Iterable[int]) -> list[int]:
    """Merge masks transitively on overlap; result masks are pairwise disjoint."""
    comps: list[int] = []
    for m in masks:
        merged = m
        rest: list[int] = []
        for c in comps:
            if c & merged:
                merged |= c
            else:
                rest.append(c)
        rest.append(merged)
        comps = rest
    return comps


def compatibility_bound_masks(cand_masks: Iterable[int], n: int) -> int:
    """Upper bound on how many disjoint n-clusters the candidates can still yield.

    Counties sharing any candidate are linked; each component of that link
    graph with k counties yields at most floor(k / n) clusters.
    """
    return sum(comp.bit_count() // n for comp in merge_overlapping_masks(cand_masks))


def compatibility_bound(candidates: list[CandidateCluster], n: int) -> int:
    """Public wrapper of the compatibility bound over id-based candidates."""
    comps: list[set[str]] = []
    for cand in candidates:
        merged = set(cand.counties)
        rest: list[set[str]] = []
        for c in comps:
            if c & merged:
                merged |= c
            else:
                rest.append(c)
        rest.append(merged)
        comps = rest
    return sum(len(c) // n for c in comps)


def compatibility_components(candidates: list[CandidateCluster]) -> list[frozenset[str]]:
    """Components of the county graph linked through shared candidates."""
    comps: list[set[str]] = []
    for cand in candidates:
        merged = set(cand.counties)
        rest: list[set[str]] = []
        for c in comps:
            if c & merged:
                merged |= c
            else:
                rest.append(c)
        rest.append(merged)
        comps = rest
    return sorted((frozenset(c) for c in comps), key=lambda s: min(s))
