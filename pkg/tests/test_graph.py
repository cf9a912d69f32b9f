import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cluster_forge import (
    County,
    CountyGraph,
    InputError,
    connected_components,
    is_contiguous,
    parse_adjacency,
    parse_counties,
    parse_population_series,
)
from cluster_forge.graph import serialize_adjacency, serialize_counties

from conftest import build_graph


def test_parse_counties_single_row():
    got = parse_counties("id,name,population\n001,Alpha,100\n")
    assert got == [County("001", "Alpha", 100)]


def test_parse_counties_crlf_and_trailing_blank():
    got = parse_counties("id,name,population\r\n001,Alpha,100\r\n002,Beta,5\r\n\r\n")
    assert [c.id for c in got] == ["001", "002"]


def test_parse_counties_duplicate_id():
    with pytest.raises(InputError, match="row 3.*duplicate id"):
        parse_counties("id,name,population\n001,A,100\n001,B,50\n")


def test_parse_counties_negative_population():
    with pytest.raises(InputError, match="row 2.*negative population"):
        parse_counties("id,name,population\n001,A,-5\n")


def test_parse_counties_malformed_population():
    with pytest.raises(InputError, match="row 2.*malformed population"):
        parse_counties("id,name,population\n001,A,ten\n")


def test_parse_counties_missing_column():
    with pytest.raises(InputError, match="bad header"):
        parse_counties("id,population\n001,100\n")


def test_parse_adjacency_basic():
    counties = parse_counties("id,name,population\n001,A,1\n002,B,2\n")
    g = parse_adjacency("id_a,id_b\n001,002\n", counties)
    assert len(g) == 2
    assert g.edges == frozenset({("001", "002")})


def test_parse_adjacency_self_loop():
    counties = parse_counties("id,name,population\n001,A,1\n")
    with pytest.raises(InputError, match="self-loop"):
        parse_adjacency("id_a,id_b\n001,001\n", counties)


def test_parse_adjacency_unknown_id():
    counties = parse_counties("id,name,population\n001,A,1\n")
    with pytest.raises(InputError, match="unknown county id '999'"):
        parse_adjacency("id_a,id_b\n001,999\n", counties)


def test_parse_adjacency_duplicate_edge_warns_or_errors():
    counties = parse_counties("id,name,population\n001,A,1\n002,B,2\n")
    warnings: list[str] = []
    g = parse_adjacency("id_a,id_b\n001,002\n002,001\n", counties, warn=warnings.append)
    assert len(g.edges) == 1
    assert warnings and "duplicate edge" in warnings[0]
    with pytest.raises(InputError, match="duplicate edge"):
        parse_adjacency("id_a,id_b\n001,002\n002,001\n", counties, strict=True)


def test_parse_population_series():
    s = parse_population_series("id,population\n001,10\n002,20\n", "2014 Estimate")
    assert s.label == "2014 Estimate"
    assert s.populations == {"001": 10, "002": 20}
    with pytest.raises(InputError, match="duplicate id"):
        parse_population_series("id,population\n001,10\n001,20\n", "x")


def test_with_populations_checks_key_set():
    g = build_graph({"A": 1, "B": 2}, [("A", "B")])
    s = parse_population_series("id,population\nA,5\n", "partial")
    with pytest.raises(InputError, match="does not match graph county ids"):
        g.with_populations(s)
    s2 = parse_population_series("id,population\nA,5\nB,6\n", "full")
    g2 = g.with_populations(s2)
    assert g2.total_population == 11
    assert g2.edges == g.edges


def test_components_path():
    g = build_graph({"A": 1, "B": 1, "C": 1}, [("A", "B"), ("B", "C")])
    assert connected_components(g, {"A", "B", "C"}) == [frozenset({"A", "B", "C"})]
    assert connected_components(g, {"A", "C"}) == [frozenset({"A"}), frozenset({"C"})]
    assert connected_components(g, set()) == []


def test_is_contiguous_path():
    g = build_graph({"A": 1, "B": 1, "C": 1}, [("A", "B"), ("B", "C")])
    assert is_contiguous(g, {"A", "B"})
    assert not is_contiguous(g, {"A", "C"})
    assert is_contiguous(g, {"A"})
    assert not is_contiguous(g, set())


@st.composite
def graph_and_subset(draw):
    m = draw(st.integers(min_value=1, max_value=9))
    ids = [f"{i}" for i in range(m)]
    pairs = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1 :]]
    edges = [p for p in pairs if draw(st.booleans())]
    g = build_graph({cid: 1 for cid in ids}, edges)
    subset = {cid for cid in ids if draw(st.booleans())}
    return g, subset


@given(graph_and_subset())
@settings(max_examples=120, deadline=None)
def test_components_partition_subset(case):
    g, subset = case
    comps = connected_components(g, subset)
    union: set[str] = set()
    for c in comps:
        assert not (union & c), "components must be pairwise disjoint"
        union |= c
    assert union == subset
    if subset:
        assert is_contiguous(g, subset) == (len(comps) == 1)


def test_round_trip_serialization():
    rng = random.Random(5)
    ids = [f"{i:02d}" for i in range(8)]
    edges = set()
    for i in range(1, 8):
        a, b = ids[i], ids[rng.randrange(i)]
        edges.add((min(a, b), max(a, b)))
    g = build_graph({cid: rng.randint(0, 500) for cid in ids}, sorted(edges))
    counties2 = parse_counties(serialize_counties(g.counties))
    g2 = parse_adjacency(serialize_adjacency(g), counties2)
    assert g2.edges == g.edges
    assert [c.population for c in g2.counties] == [c.population for c in g.counties]


def test_graph_rejects_duplicate_county():
    with pytest.raises(InputError, match="duplicate county id"):
        CountyGraph([County("A", "A", 1), County("A", "B", 2)], [])
