"""cluster-forge: exact enumeration of optimal county clusterings.

Given a county adjacency graph with populations, a statewide district count
and a population tolerance, this package enumerates every clustering that is
optimal under the hierarchical criterion (most single-county clusters, then
most two-county clusters, and so on), runs a relaxed search that trades
strict hierarchy for more total clusters, and provides comparison metrics
and split/traversal lower bounds for the results.
"""

from .errors import ClusterForgeError, InfeasibleError, InputError
from .feasibility import (
    DistrictInterval,
    ProblemSpec,
    can_cluster,
    district_bounds,
    is_valid_cluster,
)
from .graph import (
    County,
    CountyGraph,
    PopulationSeries,
    connected_components,
    is_contiguous,
    parse_adjacency,
    parse_counties,
    parse_population_series,
)
from .metrics import (
    average_population_change,
    different_clusters,
    population_deviation,
    split_lower_bound,
    stability_chain,
    traversal_lower_bound,
    variation_of_information,
)
from .relaxed import (
    CompressedSolutionSet,
    compress_solutions,
    expand_solutions,
    relaxed_measure,
    relaxed_search,
)
from .solver import (
    Cluster,
    Clustering,
    SolutionSet,
    SolverOptions,
    compare_signatures,
    max_cluster_sets,
    optimal_clusterings,
    size_signature,
    validate_clustering,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterForgeError",
    "InfeasibleError",
    "InputError",
    "County",
    "CountyGraph",
    "PopulationSeries",
    "connected_components",
    "is_contiguous",
    "parse_adjacency",
    "parse_counties",
    "parse_population_series",
    "DistrictInterval",
    "ProblemSpec",
    "can_cluster",
    "district_bounds",
    "is_valid_cluster",
    "average_population_change",
    "different_clusters",
    "population_deviation",
    "split_lower_bound",
    "stability_chain",
    "traversal_lower_bound",
    "variation_of_information",
    "CompressedSolutionSet",
    "compress_solutions",
    "expand_solutions",
    "relaxed_measure",
    "relaxed_search",
    "Cluster",
    "Clustering",
    "SolutionSet",
    "SolverOptions",
    "compare_signatures",
    "max_cluster_sets",
    "optimal_clusterings",
    "size_signature",
    "validate_clustering",
    "__version__",
]
