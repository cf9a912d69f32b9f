"""Population-validity intervals and the clusterability decision procedure.

All arithmetic is exact integer arithmetic. The tolerance is carried as a
rational num/den pair and the per-district population bracket is rounded
first (ceil of the lower ideal bound, floor of the upper), then scaled by
the district count; rounding after scaling would admit different sets near
the boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import InfeasibleError, InputError
from .graph import CountyGraph, GraphIndex


def ceil_div(a: int, b: int) -> int:
    """Exact ceiling division for non-negative a and positive b."""
    return -(-a // b)


@dataclass(frozen=True)
class ProblemSpec:
    """Instance parameters: district count, tolerance, derived population bracket.

    min_district_pop = ceil((1 - eps) * state_pop / districts)
    max_district_pop = floor((1 + eps) * state_pop / districts)
    with eps = tolerance_num / tolerance_den held exactly.
    """

    total_districts: int
    tolerance_num: int
    tolerance_den: int
    state_population: int
    min_district_pop: int
    max_district_pop: int

    @classmethod
    def create(
        cls,
        total_districts: int,
        state_population: int,
        tolerance_num: int = 1,
        tolerance_den: int = 20,
    ) -> "ProblemSpec":
        if total_districts < 1:
            raise InputError(f"district count must be positive, got {total_districts}")
        if tolerance_den <= 0 or tolerance_num < 0:
            raise InputError(
                f"tolerance must be a non-negative rational, got {tolerance_num}/{tolerance_den}"
            )
        if tolerance_num >= tolerance_den:
            raise InputError(
                f"tolerance must be below 1, got {tolerance_num}/{tolerance_den}"
            )
        if state_population < 1:
            raise InputError(f"total population must be positive, got {state_population}")
        den = tolerance_den * total_districts
        min_pop = ceil_div((tolerance_den - tolerance_num) * state_population, den)
        max_pop = (tolerance_den + tolerance_num) * state_population // den
        if min_pop > max_pop:
            raise InfeasibleError(
                f"no integer district population satisfies the tolerance: "
                f"min {min_pop} > max {max_pop} "
                f"(population {state_population}, districts {total_districts}, "
                f"tolerance {tolerance_num}/{tolerance_den})"
            )
        return cls(
            total_districts=total_districts,
            tolerance_num=tolerance_num,
            tolerance_den=tolerance_den,
            state_population=state_population,
            min_district_pop=min_pop,
            max_district_pop=max_pop,
        )

    @classmethod
    def for_graph(
        cls,
        graph: CountyGraph,
        total_districts: int,
        tolerance_num: int = 1,
        tolerance_den: int = 20,
    ) -> "ProblemSpec":
        return cls.create(total_districts, graph.total_population, tolerance_num, tolerance_den)

    @property
    def epsilon_str(self) -> str:
        return f"{self.tolerance_num}/{self.tolerance_den}"


@dataclass(frozen=True)
class DistrictInterval:
    """Integer range [d_min, d_max] of feasible district counts; empty when d_min > d_max."""

    d_min: int
    d_max: int

    @property
    def is_empty(self) -> bool:
        return self.d_min > self.d_max

    def __contains__(self, d: int) -> bool:
        return self.d_min <= d <= self.d_max

    def __iter__(self):
        return iter(range(self.d_min, self.d_max + 1))


# canonical empty interval: keeps d_min/d_max monotone in population
EMPTY_INTERVAL = DistrictInterval(1, 0)


def district_bounds(population: int, spec: ProblemSpec) -> DistrictInterval:
    """All integer district counts d for which `population` is valid.

    d is feasible iff min_district_pop * d <= population <= max_district_pop * d,
    i.e. ceil(pop / max) <= d <= floor(pop / min). Zero population has no
    feasible count (every cluster holds at least one district).
    """
    if population < 0:
        raise InputError(f"negative population {population}")
    if population == 0:
        return EMPTY_INTERVAL
    return DistrictInterval(
        ceil_div(population, spec.max_district_pop),
        population // spec.min_district_pop,
    )


def interval_for_pop(population: int, spec: ProblemSpec) -> tuple[int, int]:
    """(d_min, d_max) for a positive population; (1, 0) when population is 0."""
    if population == 0:
        return (1, 0)
    return (
        ceil_div(population, spec.max_district_pop),
        population // spec.min_district_pop,
    )


def is_valid_cluster(
    counties: Iterable[str], d: int, graph: CountyGraph, spec: ProblemSpec
) -> bool:
    """True iff `counties` is contiguous and d lies in its district interval."""
    idx = graph.index()
    mask = idx.mask_of(counties)
    if not idx.is_connected(mask):
        return False
    return d in district_bounds(idx.pop_of(mask), spec)


def component_interval_sums(
    idx: GraphIndex, spec: ProblemSpec, mask: int
) -> tuple[int, int] | None:
    """Sum of per-component district intervals over the induced subgraph.

    Returns None when any component has an empty interval (the subset cannot
    be clustered at all). The empty mask sums to (0, 0).
    """
    lo_sum = 0
    hi_sum = 0
    for comp in idx.components(mask):
        lo, hi = interval_for_pop(idx.pop_of(comp), spec)
        if lo > hi:
            return None
        lo_sum += lo
        hi_sum += hi
    return lo_sum, hi_sum


def can_cluster_mask(idx: GraphIndex, spec: ProblemSpec, mask: int, d: int) -> bool:
    if d < 0:
        return False
    sums = component_interval_sums(idx, spec, mask)
    if sums is None:
        return False
    return sums[0] <= d <= sums[1]


def can_cluster(
    counties: Iterable[str], d: int, graph: CountyGraph, spec: ProblemSpec
) -> bool:
    """Decide whether `counties` admits a valid clustering into exactly d districts.

    Holds iff every connected component has a nonempty district interval and
    d lies between the summed interval endpoints. The empty set is
    clusterable into exactly 0 districts.
    """
    idx = graph.index()
    return can_cluster_mask(idx, spec, idx.mask_of(counties), d)
