"""Command-line interface.

Subcommands: solve, relax, compare, apc, stability, deviation, splits,
verify. Results go to --out when given (written atomically), otherwise to
stdout; progress and warnings go to stderr only.

Exit codes: 0 success, 1 internal error, 2 input error, 3 infeasible
instance.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .errors import ClusterForgeError, InfeasibleError, InputError
from .feasibility import ProblemSpec
from .graph import (
    CountyGraph,
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
from .oracle import brute_force_optimal
from .relaxed import compress_solutions, relaxed_search
from .serialize import (
    compressed_to_obj,
    dumps_canonical,
    loads,
    solution_set_from_obj,
    solution_set_to_obj,
    spec_to_obj,
)
from .solver import SolutionSet, SolverOptions, optimal_clusterings

COUNTIES_FORMAT = "counties CSV: header id,name,population"
ADJACENCY_FORMAT = "adjacency CSV: header id_a,id_b, each undirected edge once"
POPULATIONS_FORMAT = "populations CSV: header id,population"


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def fmt6(value: float) -> str:
    """Fixed 6 decimal places; IEEE half-even rounding."""
    return f"{value:.6f}"


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _write_atomic(out, text)
        _log(f"wrote {out}")


def _parse_epsilon(text: str) -> tuple[int, int]:
    parts = text.split("/")
    if len(parts) != 2:
        raise InputError(f"epsilon must be NUM/DEN, got {text!r}")
    try:
        num, den = int(parts[0]), int(parts[1])
    except ValueError:
        raise InputError(f"epsilon must be NUM/DEN with integers, got {text!r}") from None
    if num < 0 or den <= 0:
        raise InputError(f"epsilon must be non-negative with positive denominator, got {text!r}")
    return num, den


def _load_graph(args: argparse.Namespace) -> CountyGraph:
    counties = parse_counties(_read_text(args.counties))
    graph = parse_adjacency(
        _read_text(args.adjacency),
        counties,
        strict=getattr(args, "strict_parse", False),
        warn=_log,
    )
    populations = getattr(args, "populations", None)
    if populations:
        series = parse_population_series(_read_text(populations), Path(populations).stem)
        graph = graph.with_populations(series)
    return graph


def _solver_options(args: argparse.Namespace) -> SolverOptions:
    return SolverOptions(
        prune_small_components=not getattr(args, "no_prune_small_components", False),
        compatibility_bound=not getattr(args, "no_compatibility_bound", False),
        threads=getattr(args, "threads", 1) or 1,
        progress=None if getattr(args, "quiet", False) else _log,
    )


def _load_solution_file(path: str) -> SolutionSet:
    return solution_set_from_obj(loads(_read_text(path)))


def _pick_clustering(solutions: SolutionSet, index: int, path: str):
    if not solutions.clusterings:
        raise InputError(f"{path}: contains no solutions")
    if not 0 <= index < len(solutions.clusterings):
        raise InputError(
            f"{path}: solution index {index} out of range 0..{len(solutions.clusterings) - 1}"
        )
    return solutions.clusterings[index]


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def _plot_path(args: argparse.Namespace) -> str | None:
    if getattr(args, "no_plot", False):
        return None
    explicit = getattr(args, "plot", None)
    if explicit:
        return explicit
    out = getattr(args, "out", None)
    if out:
        return str(Path(out).with_suffix(".png"))
    return None


def _handle_solve(args: argparse.Namespace) -> int:
    graph = _load_graph(args)
    num, den = _parse_epsilon(args.epsilon)
    spec = ProblemSpec.for_graph(graph, args.districts, num, den)
    solutions = optimal_clusterings(graph, spec, _solver_options(args))
    if args.dedupe_partitions:
        solutions = solutions.dedupe_partitions()
    _emit(dumps_canonical(solution_set_to_obj(solutions)), args.out)
    if not getattr(args, "quiet", False):
        _log(
            f"{len(solutions)} optimal clustering(s), signature "
            f"{list(solutions.signature or ())}"
        )
    return 0


def _default_fuzz(districts: int) -> int:
    # larger chambers blow up the search tree, so relax less by default
    return 2 if districts >= 100 else 3


def _handle_relax(args: argparse.Namespace) -> int:
    graph = _load_graph(args)
    num, den = _parse_epsilon(args.epsilon)
    spec = ProblemSpec.for_graph(graph, args.districts, num, den)
    fuzz = args.fuzz if args.fuzz is not None else _default_fuzz(args.districts)
    solutions = relaxed_search(graph, spec, fuzz, _solver_options(args))
    if args.dedupe_partitions:
        solutions = solutions.dedupe_partitions()
    _emit(dumps_canonical(solution_set_to_obj(solutions)), args.out)
    if args.compressed_out:
        compressed = compress_solutions(solutions)
        _write_atomic(args.compressed_out, dumps_canonical(compressed_to_obj(compressed)))
        _log(
            f"wrote {args.compressed_out} "
            f"({compressed.representative_count} representative(s), "
            f"{len(compressed.regions)} region(s))"
        )
    if not getattr(args, "quiet", False):
        totals = [len(c.clusters) for c in solutions.clusterings]
        top = max(totals, default=0)
        _log(
            f"fuzz {fuzz}: {len(solutions)} clustering(s); "
            f"max total clusters {top} reached by {sum(1 for t in totals if t == top)}"
        )
    return 0


def _handle_compare(args: argparse.Namespace) -> int:
    set_a = _load_solution_file(args.file_a)
    set_b = _load_solution_file(args.file_b)
    a = _pick_clustering(set_a, args.index_a, args.file_a)
    b = _pick_clustering(set_b, args.index_b, args.file_b)
    dc = different_clusters(a, b, ignore_districts=args.dc_ignore_districts)
    vi = variation_of_information(a, b)
    text = _csv_text(
        ["metric", "value"],
        [["dc_percent", fmt6(dc)], ["vi_bits_per_county", fmt6(vi)]],
    )
    _emit(text, args.out)
    return 0


def _handle_apc(args: argparse.Namespace) -> int:
    x = parse_population_series(_read_text(args.file_x), Path(args.file_x).stem)
    y = parse_population_series(_read_text(args.file_y), Path(args.file_y).stem)
    apc = average_population_change(x, y)
    text = _csv_text(["metric", "value"], [["apc_percent_per_county", fmt6(apc)]])
    _emit(text, args.out)
    return 0


def _cache_dir() -> Path:
    override = os.environ.get("CLUSTER_FORGE_CACHE")
    if override:
        return Path(override)
    return Path.home() / ".cache" / "cluster-forge"


def _cached_solve(
    graph: CountyGraph,
    spec: ProblemSpec,
    options: SolverOptions,
    key_material: bytes,
) -> SolutionSet:
    digest = hashlib.sha256(key_material).hexdigest()
    cache_file = _cache_dir() / f"{digest}.json"
    if cache_file.is_file():
        try:
            return solution_set_from_obj(loads(cache_file.read_text(encoding="utf-8")))
        except (InputError, OSError):
            _log(f"ignoring unreadable cache entry {cache_file}")
    solutions = optimal_clusterings(graph, spec, options)
    try:
        _write_atomic(str(cache_file), dumps_canonical(solution_set_to_obj(solutions)))
    except OSError as e:
        _log(f"cache write failed ({e}); continuing")
    return solutions


def _handle_stability(args: argparse.Namespace) -> int:
    counties_text = _read_text(args.counties)
    adjacency_text = _read_text(args.adjacency)
    counties = parse_counties(counties_text)
    base_graph = parse_adjacency(adjacency_text, counties, strict=args.strict_parse, warn=_log)
    num, den = _parse_epsilon(args.epsilon)

    series_dir = Path(args.series)
    if not series_dir.is_dir():
        raise InputError(f"--series {args.series} is not a directory")
    series_files = sorted(p for p in series_dir.iterdir() if p.suffix == ".csv")
    if len(series_files) < 2:
        raise InputError(
            f"--series {args.series} needs at least two populations CSV files, "
            f"found {len(series_files)}"
        )
    series = [
        parse_population_series(_read_text(str(p)), p.stem) for p in series_files
    ]

    initial_set = _load_solution_file(args.initial)
    initial = _pick_clustering(initial_set, args.initial_index, args.initial)

    options = _solver_options(args)
    solution_sets: list[SolutionSet] = []
    for s, path in zip(series, series_files):
        graph = base_graph.with_populations(s)
        spec = ProblemSpec.for_graph(graph, args.districts, num, den)
        key = "\x00".join(
            [
                "solve",
                __version__,
                str(args.districts),
                f"{num}/{den}",
                counties_text,
                adjacency_text,
                path.read_text(encoding="utf-8"),
            ]
        ).encode("utf-8")
        if not getattr(args, "quiet", False):
            _log(f"solving for series {s.label}")
        solution_sets.append(_cached_solve(graph, spec, options, key))

    records = stability_chain(
        solution_sets, series, initial, ignore_districts=args.dc_ignore_districts
    )
    rows = [
        [
            r.from_label,
            r.to_label,
            fmt6(r.dc_percent),
            fmt6(r.vi_bits_per_county),
            fmt6(r.apc_percent_per_county),
            fmt6(r.vi_over_apc) if r.vi_over_apc is not None else "",
            str(r.chosen_index),
        ]
        for r in records
    ]
    text = _csv_text(
        [
            "from",
            "to",
            "dc_percent",
            "vi_bits_per_county",
            "apc_percent_per_county",
            "vi_over_apc",
            "chosen_solution_index",
        ],
        rows,
    )
    _emit(text, args.out)
    plot = _plot_path(args)
    if plot and records:
        from .plots import render_stability_figure

        render_stability_figure(records, plot)
        _log(f"wrote {plot}")
    return 0


def _handle_deviation(args: argparse.Namespace) -> int:
    solutions = _load_solution_file(args.solutions)
    counties = parse_counties(_read_text(args.counties))
    populations = {c.id: c.population for c in counties}
    # the ideal district population must come from the same snapshot as the
    # per-cluster populations, so always rebuild the spec over this file
    if args.epsilon is not None:
        num, den = _parse_epsilon(args.epsilon)
    else:
        num, den = solutions.spec.tolerance_num, solutions.spec.tolerance_den
    districts = args.districts if args.districts is not None else solutions.spec.total_districts
    spec = ProblemSpec.create(districts, sum(populations.values()), num, den)
    rows: list[list[str]] = []
    reports = []
    for i, clustering in enumerate(solutions.clusterings):
        report = population_deviation(clustering, spec, populations)
        reports.append((str(i), report))
        for e in report.entries:
            rows.append(
                [
                    str(i),
                    "cluster",
                    "+".join(e.counties),
                    str(e.districts),
                    str(e.population),
                    fmt6(e.deviation_percent),
                ]
            )
        rows.append([str(i), "average_signed", "", "", "", fmt6(report.average_signed)])
        rows.append([str(i), "average_absolute", "", "", "", fmt6(report.average_absolute)])
    text = _csv_text(
        ["solution", "kind", "counties", "districts", "population", "deviation_percent"],
        rows,
    )
    _emit(text, args.out)
    plot = _plot_path(args)
    if plot and reports:
        from .plots import render_deviation_figure

        render_deviation_figure(reports, plot)
        _log(f"wrote {plot}")
    return 0


def _handle_splits(args: argparse.Namespace) -> int:
    solutions = _load_solution_file(args.solutions)
    rows = []
    for i, clustering in enumerate(solutions.clusterings):
        rows.append(
            [
                str(i),
                str(len(clustering.clusters)),
                str(split_lower_bound(clustering)),
                str(traversal_lower_bound(clustering)),
            ]
        )
    text = _csv_text(
        ["solution", "total_clusters", "split_lower_bound", "traversal_lower_bound"],
        rows,
    )
    _emit(text, args.out)
    return 0


def _handle_verify(args: argparse.Namespace) -> int:
    graph = _load_graph(args)
    num, den = _parse_epsilon(args.epsilon)
    if len(graph) > args.cap:
        raise InputError(
            f"verify is brute-force and limited to {args.cap} counties "
            f"(use --cap to raise at your own risk); got {len(graph)}"
        )
    spec = ProblemSpec.for_graph(graph, args.districts, num, den)
    oracle = brute_force_optimal(graph, spec, cap=args.cap)
    try:
        solver = optimal_clusterings(graph, spec, _solver_options(args))
        solver_obj = solution_set_to_obj(solver)
    except InfeasibleError:
        solver_obj = None
    oracle_obj = solution_set_to_obj(oracle) if oracle.clusterings else None
    match = (
        (solver_obj is None and oracle_obj is None)
        or (
            solver_obj is not None
            and oracle_obj is not None
            and solver_obj["solutions"] == oracle_obj["solutions"]
            and solver_obj["signature"] == oracle_obj["signature"]
        )
    )
    report = {
        "spec": spec_to_obj(spec),
        "oracle_solutions": len(oracle.clusterings),
        "solver_solutions": len(solver_obj["solutions"]) if solver_obj else 0,
        "signature": list(oracle.signature or ()) if oracle.clusterings else None,
        "match": match,
    }
    _emit(dumps_canonical(report), args.out)
    if not match:
        _log("verify: solver output does NOT match brute-force enumeration")
        return 1
    return 0


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--counties", required=True, help=COUNTIES_FORMAT)
    p.add_argument("--adjacency", required=True, help=ADJACENCY_FORMAT)
    p.add_argument(
        "--populations",
        help=f"optional override series ({POPULATIONS_FORMAT}); label taken from filename",
    )
    p.add_argument(
        "--strict-parse",
        action="store_true",
        help="treat duplicate adjacency rows as errors instead of warnings",
    )


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--districts", type=int, required=True, help="statewide district count D")
    p.add_argument(
        "--epsilon",
        default="1/20",
        help="population tolerance as exact rational NUM/DEN (default 1/20)",
    )
    p.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="worker cap for the phase search; results are identical for any value",
    )
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument(
        "--dedupe-partitions",
        action="store_true",
        help="collapse solutions equal as county partitions, ignoring district allocation",
    )
    p.add_argument(
        "--no-prune-small-components",
        action="store_true",
        help="disable the stranded-component candidate pruning (for cross-checking)",
    )
    p.add_argument(
        "--no-compatibility-bound",
        action="store_true",
        help="disable the reachable-cluster-count bound (for cross-checking)",
    )
    p.add_argument("--quiet", action="store_true", help="suppress progress logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cluster-forge",
        description=(
            "Enumerate optimal county clusterings for legislative districts, "
            "search for clusterings with fewer county splits, and analyze "
            "clustering stability."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser(
        "solve",
        help="enumerate all optimal clusterings",
        description=(
            "Enumerate every clustering that is optimal under the hierarchical "
            "criterion: most 1-county clusters, then most 2-county clusters, "
            "and so on. Output is canonical JSON."
        ),
    )
    _add_graph_args(solve)
    _add_solver_args(solve)
    solve.set_defaults(func=_handle_solve)

    relax = sub.add_parser(
        "relax",
        help="fuzziness-relaxed search maximizing total cluster count",
        description=(
            "Keep branches within --fuzz of the best phase score instead of "
            "only the best, trading strict hierarchy for solutions with more "
            "total clusters and hence fewer county splits. Runtime grows "
            "roughly exponentially with the fuzz."
        ),
    )
    _add_graph_args(relax)
    _add_solver_args(relax)
    relax.add_argument(
        "--fuzz",
        type=int,
        default=None,
        help="retention slack (default: 3, or 2 when --districts >= 100)",
    )
    relax.add_argument(
        "--compressed-out",
        help="also write the factored backbone+regions representation here",
    )
    relax.set_defaults(func=_handle_relax)

    compare = sub.add_parser(
        "compare",
        help="different-clusters and variation-of-information between two clusterings",
        description="Compare one clustering from each of two solution JSON files.",
    )
    compare.add_argument("file_a", help="first solution JSON file")
    compare.add_argument("file_b", help="second solution JSON file")
    compare.add_argument("--index-a", type=int, default=0, help="solution index in file A")
    compare.add_argument("--index-b", type=int, default=0, help="solution index in file B")
    compare.add_argument(
        "--dc-ignore-districts",
        action="store_true",
        help="count clusters as shared when county sets match even if district counts differ",
    )
    compare.add_argument("--out", help="output path (default: stdout)")
    compare.set_defaults(func=_handle_compare)

    apc = sub.add_parser(
        "apc",
        help="average population change between two population snapshots",
        description=f"Both inputs: {POPULATIONS_FORMAT}.",
    )
    apc.add_argument("file_x", help="first populations CSV")
    apc.add_argument("file_y", help="second populations CSV")
    apc.add_argument("--out", help="output path (default: stdout)")
    apc.set_defaults(func=_handle_apc)

    stability = sub.add_parser(
        "stability",
        help="minimum-change chain of optimal clusterings across population updates",
        description=(
            "Solve each populations CSV in --series (sorted by filename), then "
            "walk from --initial choosing at each step the next-set clustering "
            "with the fewest different clusters (ties: smaller variation of "
            "information). Emits one CSV row per transition and a line figure. "
            "Solves are cached; set CLUSTER_FORGE_CACHE to move the cache."
        ),
    )
    stability.add_argument("--series", required=True, help="directory of populations CSV files")
    stability.add_argument("--counties", required=True, help=COUNTIES_FORMAT)
    stability.add_argument("--adjacency", required=True, help=ADJACENCY_FORMAT)
    stability.add_argument("--districts", type=int, required=True)
    stability.add_argument("--epsilon", default="1/20", help="tolerance NUM/DEN (default 1/20)")
    stability.add_argument("--initial", required=True, help="solution JSON holding the starting clustering")
    stability.add_argument("--initial-index", type=int, default=0)
    stability.add_argument("--dc-ignore-districts", action="store_true")
    stability.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    stability.add_argument("--strict-parse", action="store_true")
    stability.add_argument("--quiet", action="store_true")
    stability.add_argument("--out", help="CSV output path (default: stdout)")
    stability.add_argument("--plot", help="figure path (default: --out with .png)")
    stability.add_argument("--no-plot", action="store_true", help="skip the figure")
    stability.set_defaults(func=_handle_stability)

    deviation = sub.add_parser(
        "deviation",
        help="per-cluster population deviation from the ideal district population",
        description=(
            "For each solution in the JSON file, report every cluster's percent "
            "deviation from the ideal district population plus per-solution "
            "averages, and render a scatter figure."
        ),
    )
    deviation.add_argument("solutions", help="solution JSON file")
    deviation.add_argument("--counties", required=True, help=COUNTIES_FORMAT)
    deviation.add_argument("--districts", type=int, default=None, help="override district count")
    deviation.add_argument("--epsilon", default=None, help="override tolerance NUM/DEN")
    deviation.add_argument("--out", help="CSV output path (default: stdout)")
    deviation.add_argument("--plot", help="figure path (default: --out with .png)")
    deviation.add_argument("--no-plot", action="store_true", help="skip the figure")
    deviation.set_defaults(func=_handle_deviation)

    splits = sub.add_parser(
        "splits",
        help="county-split and traversal lower bounds per solution",
        description=(
            "split bound = districts - clusters; traversal bound = counties - "
            "clusters. Any districting of a clustering needs at least that many."
        ),
    )
    splits.add_argument("solutions", help="solution JSON file")
    splits.add_argument("--out", help="output path (default: stdout)")
    splits.set_defaults(func=_handle_splits)

    verify = sub.add_parser(
        "verify",
        help="cross-check the solver against brute-force enumeration (small instances)",
        description=(
            "Enumerate every valid clustering outright and compare the optimal "
            "set with the solver's output. Exponential; refuses more than "
            "--cap counties."
        ),
    )
    _add_graph_args(verify)
    verify.add_argument("--districts", type=int, required=True)
    verify.add_argument("--epsilon", default="1/20", help="tolerance NUM/DEN (default 1/20)")
    verify.add_argument("--cap", type=int, default=10, help="county-count cap (default 10)")
    verify.add_argument("--threads", type=int, default=1)
    verify.add_argument("--quiet", action="store_true")
    verify.add_argument("--out", help="output path (default: stdout)")
    verify.set_defaults(func=_handle_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        _log(f"error: {e}")
        return 2
    except InfeasibleError as e:
        _log(f"infeasible: {e}")
        return 3
    except ClusterForgeError as e:
        _log(f"internal error: {e}")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
