"""Exact enumeration of all optimal county clusterings.

The driver assigns clusters in phases of increasing county count n. Each
phase runs a branch-and-bound depth-first search per retained partial
solution: it enumerates the valid n-county candidates on the unassigned
counties, walks all disjoint candidate subsets in canonical index order
(later branches only use higher-indexed candidates, so each subset is
visited once), and gates every branch on the remaining counties still being
clusterable into the remaining districts. Only extensions achieving the
best phase score survive; with a positive fuzz, extensions within fuzz of
the best score survive, scored by the relaxed measure
(n + 1) * clusters + unassigned counties.

With fuzz 0 all retained partials share identical cluster-size counts, so
the score order coincides with the count of n-clusters added and the driver
realizes the hierarchical most-small-clusters-first criterion exactly.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable

from .candidates import (
    MaskCandidate,
    compatibility_bound_masks,
    enumerate_mask_candidates,
    prune_mask_candidates,
)
from .errors import InfeasibleError
from .feasibility import (
    ProblemSpec,
    can_cluster_mask,
    component_interval_sums,
    district_bounds,
    interval_for_pop,
)
from .graph import CountyGraph, GraphIndex


@dataclass(frozen=True)
class Cluster:
    """A contiguous county set holding a fixed number of districts."""

    counties: frozenset[str]
    districts: int

    def sort_key(self) -> tuple[tuple[str, ...], int]:
        return (tuple(sorted(self.counties)), self.districts)

    def to_obj(self) -> dict:
        return {"counties": sorted(self.counties), "districts": self.districts}


@dataclass(frozen=True)
class Clustering:
    """A complete partition of the counties into clusters, Σ districts = D."""

    clusters: tuple[Cluster, ...]

    @classmethod
    def from_clusters(cls, clusters: Iterable[Cluster]) -> "Clustering":
        ordered = tuple(sorted(clusters, key=lambda c: min(c.counties)))
        return cls(ordered)

    def signature(self) -> tuple[int, ...]:
        return size_signature(self)

    def partition(self) -> frozenset[frozenset[str]]:
        return frozenset(c.counties for c in self.clusters)

    def total_districts(self) -> int:
        return sum(c.districts for c in self.clusters)

    def county_ids(self) -> frozenset[str]:
        out: set[str] = set()
        for c in self.clusters:
            out |= c.counties
        return frozenset(out)

    def to_obj(self) -> list[dict]:
        return [c.to_obj() for c in self.clusters]

    def sort_key(self) -> str:
        """Canonical order is lexicographic on the compact serialization."""
        return json.dumps(self.to_obj(), separators=(",", ":"))


def size_signature(clustering: Clustering) -> tuple[int, ...]:
    """Counts of n-county clusters, n = 1.., trailing zeros trimmed."""
    if not clustering.clusters:
        return ()
    top = max(len(c.counties) for c in clustering.clusters)
    counts = [0] * top
    for c in clustering.clusters:
        counts[len(c.counties) - 1] += 1
    return tuple(counts)


def compare_signatures(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """1 if a is preferred, -1 if b is preferred, 0 on a tie.

    Preference scans cluster sizes upward: more 1-county clusters first,
    then more 2-county clusters, and so on; missing entries count as zero.
    """
    for n in range(max(len(a), len(b))):
        an = a[n] if n < len(a) else 0
        bn = b[n] if n < len(b) else 0
        if an != bn:
            return 1 if an > bn else -1
    return 0


@dataclass(frozen=True)
class SolutionSet:
    """Canonical, deduplicated, deterministically ordered clusterings.

    In strict mode all members share `signature`; in relaxed mode signatures
    vary and `signature` is None.
    """

    spec: ProblemSpec
    clusterings: tuple[Clustering, ...]
    signature: tuple[int, ...] | None
    fuzz: int | None = None

    def __len__(self) -> int:
        return len(self.clusterings)

    def dedupe_partitions(self) -> "SolutionSet":
        """Collapse clusterings equal as county partitions, keeping the
        canonically first district allocation of each group."""
        seen: set[frozenset[frozenset[str]]] = set()
        kept: list[Clustering] = []
        for c in self.clusterings:
            part = c.partition()
            if part in seen:
                continue
            seen.add(part)
            kept.append(c)
        return SolutionSet(self.spec, tuple(kept), self.signature, self.fuzz)


def validate_clustering(
    clustering: Clustering, graph: CountyGraph, spec: ProblemSpec
) -> list[str]:
    """All invariant violations of a clustering; empty means valid."""
    violations: list[str] = []
    idx = graph.index()
    seen = 0
    total_d = 0
    for cluster in clustering.clusters:
        mask = idx.mask_of(cluster.counties)
        if mask & seen:
            overlap = idx.ids_of(mask & seen)
            violations.append(f"overlap violation: counties {', '.join(overlap)} assigned twice")
        seen |= mask
        total_d += cluster.districts
        if not idx.is_connected(mask):
            violations.append(
                f"contiguity violation: cluster {'+'.join(sorted(cluster.counties))} is not connected"
            )
        if cluster.districts < 1:
            violations.append(
                f"district violation: cluster {'+'.join(sorted(cluster.counties))} has d={cluster.districts}"
            )
        elif cluster.districts not in district_bounds(idx.pop_of(mask), spec):
            violations.append(
                f"population violation: cluster {'+'.join(sorted(cluster.counties))} "
                f"pop {idx.pop_of(mask)} invalid for d={cluster.districts}"
            )
    uncovered = idx.full_mask & ~seen
    for cid in idx.ids_of(uncovered):
        violations.append(f"cover violation: county {cid} unassigned")
    if total_d != spec.total_districts:
        violations.append(
            f"district sum violation: {total_d} != {spec.total_districts}"
        )
    return violations


@dataclass(frozen=True)
class SolverOptions:
    """Search tuning: the two prunings can be disabled for cross-checking."""

    prune_small_components: bool = True
    compatibility_bound: bool = True
    threads: int = 1
    progress: Callable[[str], None] | None = None
    phase_hook: Callable[[int, list["PartialSolution"]], None] | None = None


@dataclass(frozen=True)
class PartialSolution:
    """Engine state: clusters chosen so far, plus leftover counties/districts."""

    clusters: tuple[tuple[int, int], ...]  # (mask, districts), sorted by low bit
    leftover: int
    districts_left: int

    def measure(self, n: int) -> int:
        return (n + 1) * len(self.clusters) + self.leftover.bit_count()


class _Incumbent:
    """Monotone shared maximum; safe under concurrent phase workers."""

    def __init__(self, value: int = 0):
        self.value = value
        self._lock = threading.Lock()

    def observe(self, value: int) -> int:
        with self._lock:
            if value > self.value:
                self.value = value
            return self.value

    def get(self) -> int:
        return self.value


_Split = "tuple[tuple[tuple[int, int, int, int], ...], int, int] | None"


class _SplitCache:
    """Memoized component decomposition with district intervals.

    split(mask) is None when some component has an empty interval, else
    (pieces, lo_sum, hi_sum) with pieces of (comp_mask, pop, d_min, d_max).
    Values are immutable, so racing threads at worst recompute; they never
    corrupt each other.
    """

    def __init__(self, idx: GraphIndex, spec: ProblemSpec):
        self.idx = idx
        self.spec = spec
        self._memo: dict[int, _Split] = {}

    def split(self, mask: int) -> _Split:
        try:
            return self._memo[mask]
        except KeyError:
            pass
        pieces: list[tuple[int, int, int, int]] = []
        lo_sum = 0
        hi_sum = 0
        value: _Split = None
        for comp, pop in self.idx.components_with_pops(mask):
            lo, hi = interval_for_pop(pop, self.spec)
            if lo > hi:
                break
            pieces.append((comp, pop, lo, hi))
            lo_sum += lo
            hi_sum += hi
        else:
            value = (tuple(pieces), lo_sum, hi_sum)
        self._memo[mask] = value
        return value


def _dfs_max_sets(
    idx: GraphIndex,
    spec: ProblemSpec,
    subset: int,
    d_left: int,
    n: int,
    fuzz: int,
    base: int,
    incumbent: _Incumbent,
    options: SolverOptions,
    cands: list[MaskCandidate] | None = None,
    cache: _SplitCache | None = None,
) -> dict[int, list[tuple[tuple[int, int], ...]]]:
    """All sets of disjoint valid n-clusters reaching the incumbent window.

    Returns {cluster-count t: [chosen sets]} for every explored stopping
    point with base + t within fuzz of the incumbent at collection time; the
    caller re-filters against the final incumbent. Empty when `subset`
    cannot be clustered into d_left districts at all.

    `cands` may carry pre-enumerated, pre-pruned candidates for `subset`
    (validity and connectivity are intrinsic to a county set, so candidate
    lists restrict by mask containment). The recursion carries the
    component decomposition: removing a connected candidate only shatters
    the one component containing it.
    """
    if cache is None:
        cache = _SplitCache(idx, spec)
    split = cache.split(subset)
    if split is None or not (split[1] <= d_left <= split[2]):
        return {}
    if cands is None:
        cands = enumerate_mask_candidates(idx, spec, subset, n)
        if options.prune_small_components:
            cands = prune_mask_candidates(idx, subset, n, cands)
    out: dict[int, list[tuple[tuple[int, int], ...]]] = {}
    seen_best = 0

    def record(chosen: tuple[tuple[int, int], ...]) -> int:
        nonlocal seen_best
        t = len(chosen)
        score = base + t
        best = incumbent.observe(score) if score > incumbent.value else incumbent.value
        if score >= best - fuzz:
            out.setdefault(t, []).append(chosen)
        if best > seen_best:
            seen_best = best
            for k in [k for k in out if base + k < best - fuzz]:
                del out[k]
        return best

    min_pop = spec.min_district_pop
    max_pop = spec.max_district_pop

    def rec(
        comps: tuple[tuple[int, int, int, int], ...],
        lo_sum: int,
        hi_sum: int,
        d: int,
        cand_list: list[MaskCandidate],
        chosen: tuple[tuple[int, int], ...],
    ) -> None:
        best = record(chosen)
        if not cand_list:
            return
        # clusters still needed to stay in the retention window; no bound
        # can prune a node that is already inside it
        needed = (best - fuzz) - (base + len(chosen))
        if needed > 0:
            if len(cand_list) < needed:
                return
            if options.compatibility_bound:
                union = 0
                for c in cand_list:
                    union |= c.mask
                if union.bit_count() // n < needed:
                    return
                bound = compatibility_bound_masks((c.mask for c in cand_list), n)
                if bound < needed:
                    return
        for pos, cand in enumerate(cand_list):
            for ci, comp_entry in enumerate(comps):
                if comp_entry[0] & cand.mask:
                    break
            else:  # pragma: no cover - candidates always sit in a component
                continue
            cmask, cpop, clo, chi = comp_entry
            # optimistic interval for the shattered component: summing per
            # piece can only raise the lower sum and lower the upper sum,
            # so an empty optimistic range means a dead candidate with no
            # component walk needed
            rest_pop = cpop - cand.pop
            lo0 = max(cand.d_min, d - (hi_sum - chi + rest_pop // min_pop), 1)
            hi0 = min(cand.d_max, d - (lo_sum - clo + -(-rest_pop // max_pop)))
            if lo0 > hi0:
                continue
            piece_split = cache.split(cmask & ~cand.mask)
            if piece_split is None:
                continue
            pieces, plo, phi = piece_split
            new_lo = lo_sum - clo + plo
            new_hi = hi_sum - chi + phi
            lo = max(cand.d_min, d - new_hi, 1)
            hi = min(cand.d_max, d - new_lo)
            if lo > hi:
                continue
            new_comps = comps[:ci] + comps[ci + 1 :] + pieces
            nxt = [c for c in cand_list[pos + 1 :] if c.mask & cand.mask == 0]
            for dp in range(lo, hi + 1):
                rec(new_comps, new_lo, new_hi, d - dp, nxt, chosen + ((cand.mask, dp),))

    rec(split[0], split[1], split[2], d_left, cands, ())
    return out


def _extend_partial(
    partial: PartialSolution, chosen: tuple[tuple[int, int], ...]
) -> PartialSolution:
    removed = 0
    used = 0
    for mask, dp in chosen:
        removed |= mask
        used += dp
    clusters = tuple(
        sorted(partial.clusters + chosen, key=lambda cd: cd[0] & -cd[0])
    )
    return PartialSolution(clusters, partial.leftover & ~removed, partial.districts_left - used)


def solve_engine(
    graph: CountyGraph,
    spec: ProblemSpec,
    fuzz: int = 0,
    options: SolverOptions | None = None,
) -> list[PartialSolution]:
    """Run the phase loop to completion; returns complete partials.

    Raises InfeasibleError when the instance admits no valid clustering.
    With fuzz > 0 an empty result is possible: the stage-wise retention may
    discard every branch that could still complete.
    """
    options = options or SolverOptions()
    idx = graph.index()
    full = idx.full_mask
    if not can_cluster_mask(idx, spec, full, spec.total_districts):
        sums = component_interval_sums(idx, spec, full)
        if sums is None:
            raise InfeasibleError(
                "some connected region has no feasible district count for "
                f"bounds [{spec.min_district_pop}, {spec.max_district_pop}]"
            )
        raise InfeasibleError(
            f"districts {spec.total_districts} outside the feasible range "
            f"[{sums[0]}, {sums[1]}] for bounds "
            f"[{spec.min_district_pop}, {spec.max_district_pop}]"
        )
    partials: dict[tuple[tuple[int, int], ...], PartialSolution] = {
        (): PartialSolution((), full, spec.total_districts)
    }
    n = 0
    county_count = len(idx.ids)
    while True:
        n += 1
        if n > county_count + 1:
            raise AssertionError("phase loop failed to terminate")
        # a leftover component smaller than n can never be covered again:
        # every cluster formed from phase n on spans at least n counties
        live: list[PartialSolution] = []
        small_masks: dict[int, int] = {}
        for key in sorted(partials):
            p = partials[key]
            if p.leftover == 0:
                live.append(p)
                continue
            comps = idx.components(p.leftover)
            if any(comp.bit_count() < n for comp in comps):
                continue
            small = 0
            for comp in comps:
                if n < comp.bit_count() < 2 * n:
                    small |= comp
            small_masks[p.leftover] = small
            live.append(p)
        if not live:
            if fuzz == 0:
                raise AssertionError("strict search lost all branches")
            return []
        if all(p.leftover == 0 for p in live):
            return live
        if options.progress is not None:
            options.progress(
                f"phase {n}: {len(live)} partial solutions, "
                f"{sum(1 for p in live if p.leftover == 0)} complete"
            )

        # candidate validity and connectivity are intrinsic to the county
        # set, so enumerate once over the union of leftovers and restrict
        # per partial by containment
        union_mask = 0
        for p in live:
            union_mask |= p.leftover
        phase_cands = enumerate_mask_candidates(idx, spec, union_mask, n)
        cache = _SplitCache(idx, spec)
        incumbent = _Incumbent(max(p.measure(n) for p in live))

        def work(p: PartialSolution) -> dict[int, list[tuple[tuple[int, int], ...]]]:
            base = p.measure(n)
            if p.leftover == 0:
                incumbent.observe(base)
                return {0: [()]}
            mine = [c for c in phase_cands if c.mask & ~p.leftover == 0]
            if options.prune_small_components:
                small = small_masks[p.leftover]
                if small:
                    mine = [c for c in mine if c.mask & small == 0]
            return _dfs_max_sets(
                idx,
                spec,
                p.leftover,
                p.districts_left,
                n,
                fuzz,
                base,
                incumbent,
                options,
                cands=mine,
                cache=cache,
            )

        if options.threads > 1 and len(live) > 1:
            with ThreadPoolExecutor(max_workers=options.threads) as pool:
                buckets = list(pool.map(work, live))
        else:
            buckets = [work(p) for p in live]

        best = incumbent.get()
        next_partials: dict[tuple[tuple[int, int], ...], PartialSolution] = {}
        for p, result in zip(live, buckets):
            base = p.measure(n)
            for t, chosen_sets in sorted(result.items()):
                if base + t < best - fuzz:
                    continue
                for chosen in chosen_sets:
                    ext = _extend_partial(p, chosen)
                    next_partials.setdefault(ext.clusters, ext)
        partials = next_partials
        if options.phase_hook is not None:
            options.phase_hook(n, sorted(partials.values(), key=lambda p: p.clusters))


def _partials_to_solution_set(
    graph: CountyGraph,
    spec: ProblemSpec,
    partials: list[PartialSolution],
    fuzz: int | None,
) -> SolutionSet:
    idx = graph.index()
    clusterings = [
        Clustering.from_clusters(
            Cluster(frozenset(idx.ids_of(mask)), d) for mask, d in p.clusters
        )
        for p in partials
    ]
    clusterings.sort(key=lambda c: c.sort_key())
    signature: tuple[int, ...] | None = None
    if fuzz is None:
        signatures = {c.signature() for c in clusterings}
        if len(signatures) != 1:
            raise AssertionError(f"strict solutions disagree on signature: {signatures}")
        signature = signatures.pop()
    return SolutionSet(spec, tuple(clusterings), signature, fuzz)


def optimal_clusterings(
    graph: CountyGraph, spec: ProblemSpec, options: SolverOptions | None = None
) -> SolutionSet:
    """All clusterings over which none is preferred, canonically ordered."""
    partials = solve_engine(graph, spec, fuzz=0, options=options)
    return _partials_to_solution_set(graph, spec, partials, fuzz=None)


def max_cluster_sets(
    subset: Iterable[str],
    d: int,
    n: int,
    graph: CountyGraph,
    spec: ProblemSpec,
    options: SolverOptions | None = None,
) -> list[frozenset[tuple[frozenset[str], int]]]:
    """All maximum-cardinality sets of disjoint valid n-clusters on `subset`
    whose leftover can still be clustered into the remaining districts.

    Returns [frozenset()] when the maximum is zero but `subset` itself is
    feasible, and [] when it is not.
    """
    options = options or SolverOptions()
    idx = graph.index()
    mask = idx.mask_of(subset)
    incumbent = _Incumbent(0)
    buckets = _dfs_max_sets(idx, spec, mask, d, n, 0, 0, incumbent, options)
    if not buckets:
        return []
    top = max(buckets)
    sets = [
        frozenset((frozenset(idx.ids_of(m)), dp) for m, dp in chosen)
        for chosen in buckets[top]
    ]
    sets.sort(key=lambda s: sorted((tuple(sorted(ids)), dp) for ids, dp in s))
    return sets
