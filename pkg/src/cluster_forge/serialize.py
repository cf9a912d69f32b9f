"""Canonical JSON serialization of solution sets.

Output is byte-stable: clusters carry ascending-sorted county ids, a
clustering's clusters are ordered by smallest member id, clusterings are
ordered lexicographically by their compact serialization, and object keys
are emitted in a fixed order.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import InputError
from .feasibility import ProblemSpec
from .relaxed import CompressedSolutionSet, Region
from .solver import Cluster, Clustering, SolutionSet


def spec_to_obj(spec: ProblemSpec) -> dict:
    return {
        "districts": spec.total_districts,
        "epsilon": spec.epsilon_str,
        "state_population": spec.state_population,
        "min_district_pop": spec.min_district_pop,
        "max_district_pop": spec.max_district_pop,
    }


def spec_from_obj(obj: Any) -> ProblemSpec:
    try:
        num_str, den_str = obj["epsilon"].split("/")
        spec = ProblemSpec.create(
            total_districts=int(obj["districts"]),
            state_population=int(obj["state_population"]),
            tolerance_num=int(num_str),
            tolerance_den=int(den_str),
        )
    except (KeyError, ValueError, AttributeError) as e:
        raise InputError(f"malformed spec object: {e}") from None
    if (
        spec.min_district_pop != obj.get("min_district_pop", spec.min_district_pop)
        or spec.max_district_pop != obj.get("max_district_pop", spec.max_district_pop)
    ):
        raise InputError(
            "spec object carries district population bounds that do not match "
            "its districts/epsilon/state_population"
        )
    return spec


def cluster_from_obj(obj: Any) -> Cluster:
    try:
        counties = frozenset(str(c) for c in obj["counties"])
        districts = int(obj["districts"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed cluster object: {e}") from None
    if not counties:
        raise InputError("cluster with no counties")
    if len(counties) != len(obj["counties"]):
        raise InputError(f"cluster lists a county twice: {sorted(obj['counties'])}")
    return Cluster(counties, districts)


def clustering_from_obj(obj: Any) -> Clustering:
    if not isinstance(obj, list):
        raise InputError("clustering must be a list of clusters")
    return Clustering.from_clusters(cluster_from_obj(c) for c in obj)


def solution_set_to_obj(solutions: SolutionSet) -> dict:
    ordered = sorted(solutions.clusterings, key=lambda c: c.sort_key())
    if solutions.fuzz is None:
        return {
            "spec": spec_to_obj(solutions.spec),
            "signature": list(solutions.signature or ()),
            "solutions": [c.to_obj() for c in ordered],
        }
    totals = [len(c.clusters) for c in ordered]
    max_total = max(totals, default=0)
    return {
        "spec": spec_to_obj(solutions.spec),
        "fuzz": solutions.fuzz,
        "signature": None,
        "max_total_clusters": max_total,
        "max_total_cluster_solutions": sum(1 for t in totals if t == max_total),
        "solutions": [
            {
                "clusters": c.to_obj(),
                "signature": list(c.signature()),
                "total_clusters": len(c.clusters),
            }
            for c in ordered
        ],
    }


def solution_set_from_obj(obj: Any) -> SolutionSet:
    try:
        spec = spec_from_obj(obj["spec"])
        raw = obj["solutions"]
    except KeyError as e:
        raise InputError(f"solution file missing key {e.args[0]!r}") from None
    fuzz = obj.get("fuzz")
    clusterings = []
    for entry in raw:
        if isinstance(entry, dict):
            clusterings.append(clustering_from_obj(entry.get("clusters")))
        else:
            clusterings.append(clustering_from_obj(entry))
    signature = obj.get("signature")
    return SolutionSet(
        spec,
        tuple(clusterings),
        tuple(signature) if signature is not None else None,
        fuzz=fuzz,
    )


def compressed_to_obj(compressed: CompressedSolutionSet) -> dict:
    return {
        "spec": spec_to_obj(compressed.spec),
        "fuzz": compressed.fuzz,
        "solution_count": compressed.solution_count,
        "representative_count": compressed.representative_count,
        "backbone": [c.to_obj() for c in compressed.backbone],
        "regions": [
            {
                "counties": sorted(r.counties),
                "alternatives": [
                    [c.to_obj() for c in alt] for alt in r.alternatives
                ],
            }
            for r in compressed.regions
        ],
    }


def compressed_from_obj(obj: Any) -> CompressedSolutionSet:
    try:
        spec = spec_from_obj(obj["spec"])
        backbone = tuple(cluster_from_obj(c) for c in obj["backbone"])
        regions = tuple(
            Region(
                frozenset(str(c) for c in r["counties"]),
                tuple(
                    tuple(cluster_from_obj(c) for c in alt)
                    for alt in r["alternatives"]
                ),
            )
            for r in obj["regions"]
        )
        count = int(obj["solution_count"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed compressed solution file: {e}") from None
    return CompressedSolutionSet(spec, backbone, regions, count, obj.get("fuzz"))


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=True) + "\n"


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"invalid JSON: {e}") from None
