"""Shared test helpers: tiny graph builders and a random-instance generator."""

from __future__ import annotations

import random

import pytest

from cluster_forge import County, CountyGraph


def build_graph(pops: dict[str, int], edges: list[tuple[str, str]]) -> CountyGraph:
    counties = [County(cid, f"County {cid}", pop) for cid, pop in sorted(pops.items())]
    return CountyGraph(counties, edges)


@pytest.fixture
def triangle() -> CountyGraph:
    return build_graph(
        {"A": 100, "B": 100, "C": 100},
        [("A", "B"), ("B", "C"), ("A", "C")],
    )


@pytest.fixture
def path_aw() -> CountyGraph:
    """Path A(95) - B(10) - C(95): B alone has no feasible district count."""
    return build_graph({"A": 95, "B": 10, "C": 95}, [("A", "B"), ("B", "C")])


def random_connected_instance(
    rng: random.Random,
    min_counties: int = 4,
    max_counties: int = 8,
    max_districts: int = 6,
) -> tuple[CountyGraph, int]:
    """A random connected graph with populations that usually admit between
    one and a few feasible district counts per county."""
    m = rng.randint(min_counties, max_counties)
    ids = [f"{i:03d}" for i in range(m)]
    edges: set[tuple[str, str]] = set()
    order = ids[:]
    rng.shuffle(order)
    for i in range(1, m):
        a, b = order[i], order[rng.randrange(i)]
        edges.add((min(a, b), max(a, b)))
    for _ in range(rng.randint(0, m)):
        a, b = rng.sample(ids, 2)
        edges.add((min(a, b), max(a, b)))
    districts = rng.randint(1, max_districts)
    ideal = 1000
    pops: dict[str, int] = {}
    for cid in ids:
        style = rng.random()
        if style < 0.5:
            pops[cid] = rng.randint(300, 1200)
        elif style < 0.8:
            pops[cid] = int(ideal * rng.randint(1, 4) * rng.uniform(0.93, 1.07))
        else:
            pops[cid] = rng.randint(1, 3000)
    counties = [County(cid, cid, pops[cid]) for cid in ids]
    return CountyGraph(counties, edges), districts
