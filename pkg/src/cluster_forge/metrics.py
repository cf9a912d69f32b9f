"""Clustering distances, stability chaining, deviation, and split bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError
from .feasibility import ProblemSpec
from .graph import PopulationSeries
from .solver import Clustering, SolutionSet


def _check_universe(a: Clustering, b: Clustering) -> None:
    if a.county_ids() != b.county_ids():
        only_a = sorted(a.county_ids() - b.county_ids())
        only_b = sorted(b.county_ids() - a.county_ids())
        raise InputError(
            f"clusterings cover different county sets (only in first: {only_a[:5]},"
            f" only in second: {only_b[:5]})"
        )


def different_clusters(
    a: Clustering, b: Clustering, ignore_districts: bool = False
) -> float:
    """Percentage of clusters not shared, normalized by the mean cluster count.

    100 * (1 - |shared| / ((|A| + |B|) / 2)). By default a cluster counts as
    shared only when both its county set and its district count match;
    `ignore_districts` compares county sets alone.
    """
    _check_universe(a, b)
    if ignore_districts:
        shared = len(a.partition() & b.partition())
    else:
        shared = len(set(a.clusters) & set(b.clusters))
    return 100.0 * (1.0 - shared / ((len(a.clusters) + len(b.clusters)) / 2.0))


def variation_of_information(a: Clustering, b: Clustering) -> float:
    """Partition distance in bits per county.

    -sum over cluster pairs of (|Ai ∩ Bj| / n) * log2(|Ai ∩ Bj|^2 / (|Ai| |Bj|)),
    with disjoint pairs contributing zero. District counts are ignored; this
    compares the county partitions only. Zero iff the partitions are equal,
    symmetric, and satisfies the triangle inequality.
    """
    _check_universe(a, b)
    n = len(a.county_ids())
    if n == 0:
        raise InputError("cannot compare empty clusterings")
    total = 0.0
    b_sets = [c.counties for c in b.clusters]
    for ca in a.clusters:
        for cb in b_sets:
            overlap = len(ca.counties & cb)
            if overlap == 0:
                continue
            total -= (overlap / n) * math.log2(
                overlap * overlap / (len(ca.counties) * len(cb))
            )
    return abs(total)


def average_population_change(x: PopulationSeries, y: PopulationSeries) -> float:
    """Mean symmetric absolute population change per county, in percent.

    (100 / n) * sum |Xi - Yi| / ((Xi + Yi) / 2). The mean of the two
    populations in the denominator makes the measure symmetric.
    """
    if set(x.populations) != set(y.populations):
        raise InputError(
            f"population series {x.label!r} and {y.label!r} cover different county sets"
        )
    n = len(x.populations)
    if n == 0:
        raise InputError("cannot compare empty population series")
    total = 0.0
    for cid in x.populations:
        xi = x.populations[cid]
        yi = y.populations[cid]
        if xi + yi == 0:
            raise InputError(f"county {cid!r} has zero population in both series")
        total += abs(xi - yi) / ((xi + yi) / 2.0)
    return 100.0 * total / n


@dataclass(frozen=True)
class StabilityRecord:
    """One population-update transition in a stability chain."""

    from_label: str
    to_label: str
    dc_percent: float
    vi_bits_per_county: float
    apc_percent_per_county: float
    vi_over_apc: float | None
    chosen: Clustering
    chosen_index: int


def stability_chain(
    solution_sets: list[SolutionSet],
    series: list[PopulationSeries],
    initial: Clustering,
    ignore_districts: bool = False,
) -> list[StabilityRecord]:
    """Greedy minimum-change chain across consecutive population snapshots.

    Starting from `initial`, each transition picks from the next solution
    set the clustering with the fewest different clusters versus the current
    one, breaking ties by smaller variation of information, then by
    canonical order. One record is emitted per transition.
    """
    if len(solution_sets) != len(series):
        raise InputError(
            f"got {len(solution_sets)} solution sets for {len(series)} population series"
        )
    if not solution_sets:
        raise InputError("stability chain needs at least one solution set")
    current = initial
    records: list[StabilityRecord] = []
    for k in range(len(solution_sets) - 1):
        nxt = solution_sets[k + 1]
        if not nxt.clusterings:
            raise InputError(f"empty solution set for series {series[k + 1].label!r}")
        best_idx = 0
        best_key: tuple[float, float] | None = None
        for i, cand in enumerate(nxt.clusterings):
            key = (
                different_clusters(current, cand, ignore_districts),
                variation_of_information(current, cand),
            )
            if best_key is None or key < best_key:
                best_key = key
                best_idx = i
        chosen = nxt.clusterings[best_idx]
        apc = average_population_change(series[k], series[k + 1])
        dc, vi = best_key  # type: ignore[misc]
        records.append(
            StabilityRecord(
                from_label=series[k].label,
                to_label=series[k + 1].label,
                dc_percent=dc,
                vi_bits_per_county=vi,
                apc_percent_per_county=apc,
                vi_over_apc=(vi / apc) if apc > 0 else None,
                chosen=chosen,
                chosen_index=best_idx,
            )
        )
        current = chosen
    return records


@dataclass(frozen=True)
class ClusterDeviation:
    counties: tuple[str, ...]
    districts: int
    population: int
    deviation_percent: float


@dataclass(frozen=True)
class DeviationReport:
    """Per-cluster percent deviation from the ideal district population,
    assuming districts within a cluster share its population equally."""

    entries: tuple[ClusterDeviation, ...]
    average_signed: float
    average_absolute: float


def population_deviation(
    clustering: Clustering,
    spec: ProblemSpec,
    populations: dict[str, int],
) -> DeviationReport:
    """Percent deviation of each cluster's per-district population from ideal.

    100 * (pop(C)/d - pop(G)/D) / (pop(G)/D), evaluated exactly as
    100 * (pop(C) * D - d * pop(G)) / (d * pop(G)).
    """
    entries: list[ClusterDeviation] = []
    d_total = spec.total_districts
    pop_total = spec.state_population
    for cluster in clustering.clusters:
        try:
            pop = sum(populations[cid] for cid in cluster.counties)
        except KeyError as e:
            raise InputError(f"no population for county {e.args[0]!r}") from None
        dev = 100.0 * (pop * d_total - cluster.districts * pop_total) / (
            cluster.districts * pop_total
        )
        entries.append(
            ClusterDeviation(
                counties=tuple(sorted(cluster.counties)),
                districts=cluster.districts,
                population=pop,
                deviation_percent=dev,
            )
        )
    entries.sort(key=lambda e: e.counties)
    n = len(entries)
    avg_signed = sum(e.deviation_percent for e in entries) / n if n else 0.0
    avg_abs = sum(abs(e.deviation_percent) for e in entries) / n if n else 0.0
    return DeviationReport(tuple(entries), avg_signed, avg_abs)


def split_lower_bound(clustering: Clustering) -> int:
    """Lower bound on county splits of any districting of this clustering.

    A cluster holding d districts needs at least d - 1 splits, so the bound
    is sum(d_j - 1) = D - cluster count.
    """
    return sum(c.districts - 1 for c in clustering.clusters)


def traversal_lower_bound(clustering: Clustering) -> int:
    """Lower bound on county-boundary traversals of any districting.

    A cluster spanning k counties needs at least k - 1 traversals, so the
    bound is sum(|C_j| - 1) = county count - cluster count.
    """
    return sum(len(c.counties) - 1 for c in clustering.clusters)
