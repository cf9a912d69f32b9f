import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

TRIANGLE_COUNTIES = "id,name,population\nA,Alpha,100\nB,Beta,100\nC,Gamma,100\n"
TRIANGLE_ADJ = "id_a,id_b\nA,B\nB,C\nA,C\n"
PATH_COUNTIES = "id,name,population\nA,Alpha,95\nB,Beta,10\nC,Gamma,95\n"
PATH_ADJ = "id_a,id_b\nA,B\nB,C\n"


def run_cli(*args: str, env: dict | None = None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "cluster_forge.cli", *args],
        capture_output=True,
        text=True,
        env=full_env,
    )


@pytest.fixture
def path_files(tmp_path: Path) -> dict[str, str]:
    c = tmp_path / "counties.csv"
    a = tmp_path / "adjacency.csv"
    c.write_text(PATH_COUNTIES)
    a.write_text(PATH_ADJ)
    return {"counties": str(c), "adjacency": str(a), "dir": str(tmp_path)}


def test_solve_stdout_and_exit_zero(path_files):
    r = run_cli(
        "solve", "--districts", "2",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--quiet",
    )
    assert r.returncode == 0, r.stderr
    obj = json.loads(r.stdout)
    assert obj["signature"] == [1, 1]
    assert len(obj["solutions"]) == 2
    assert obj["spec"]["min_district_pop"] == 95
    assert obj["spec"]["max_district_pop"] == 105
    # stdout is pure JSON; progress would have gone to stderr
    assert r.stdout.lstrip().startswith("{")


def test_solve_outputs_are_byte_identical(path_files):
    blobs = set()
    for threads in ("1", "1", "8"):
        out = Path(path_files["dir"]) / f"out{threads}{len(blobs)}.json"
        r = run_cli(
            "solve", "--districts", "2",
            "--counties", path_files["counties"],
            "--adjacency", path_files["adjacency"],
            "--threads", threads,
            "--out", str(out), "--quiet",
        )
        assert r.returncode == 0, r.stderr
        blobs.add(out.read_bytes())
    assert len(blobs) == 1


def test_solve_golden_output(path_files):
    r = run_cli(
        "solve", "--districts", "2",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--quiet",
    )
    expected = {
        "spec": {
            "districts": 2,
            "epsilon": "1/20",
            "state_population": 200,
            "min_district_pop": 95,
            "max_district_pop": 105,
        },
        "signature": [1, 1],
        # lexicographic on the compact serialization: ["A","B"]... sorts
        # before ["A"]... because ',' < ']'
        "solutions": [
            [
                {"counties": ["A", "B"], "districts": 1},
                {"counties": ["C"], "districts": 1},
            ],
            [
                {"counties": ["A"], "districts": 1},
                {"counties": ["B", "C"], "districts": 1},
            ],
        ],
    }
    assert json.loads(r.stdout) == expected


def test_exit_codes(path_files, tmp_path):
    # infeasible: bounds cross
    r = run_cli(
        "solve", "--districts", "150",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"], "--quiet",
    )
    assert r.returncode == 3
    assert "min 2 > max 1" in r.stderr
    # input error: malformed counties file
    bad = tmp_path / "bad.csv"
    bad.write_text("id,name,population\nA,Alpha,-5\n")
    r = run_cli(
        "solve", "--districts", "2",
        "--counties", str(bad),
        "--adjacency", path_files["adjacency"], "--quiet",
    )
    assert r.returncode == 2
    assert "negative population" in r.stderr
    # bad epsilon
    r = run_cli(
        "solve", "--districts", "2", "--epsilon", "0.05",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"], "--quiet",
    )
    assert r.returncode == 2


def test_relax_and_compressed_out(path_files, tmp_path):
    out = tmp_path / "relaxed.json"
    comp = tmp_path / "relaxed.compressed.json"
    r = run_cli(
        "relax", "--districts", "2", "--fuzz", "2",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--out", str(out), "--compressed-out", str(comp), "--quiet",
    )
    assert r.returncode == 0, r.stderr
    obj = json.loads(out.read_text())
    assert obj["fuzz"] == 2
    assert obj["signature"] is None
    assert obj["max_total_clusters"] == 2
    assert {s["total_clusters"] for s in obj["solutions"]} <= {1, 2}
    cobj = json.loads(comp.read_text())
    assert cobj["solution_count"] == len(obj["solutions"])


def test_compare_and_splits_and_deviation(path_files, tmp_path):
    out = tmp_path / "sol.json"
    run_cli(
        "solve", "--districts", "2",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--out", str(out), "--quiet",
    )
    r = run_cli("compare", str(out), str(out))
    assert r.returncode == 0
    assert "dc_percent,0.000000" in r.stdout
    assert "vi_bits_per_county,0.000000" in r.stdout

    r = run_cli("compare", str(out), str(out), "--index-b", "1")
    assert "dc_percent,100.000000" in r.stdout

    r = run_cli("compare", str(out), str(out), "--index-b", "5")
    assert r.returncode == 2

    r = run_cli("splits", str(out))
    assert r.returncode == 0
    lines = r.stdout.strip().splitlines()
    assert lines[0] == "solution,total_clusters,split_lower_bound,traversal_lower_bound"
    assert lines[1] == "0,2,0,1"

    dev_csv = tmp_path / "dev.csv"
    r = run_cli(
        "deviation", str(out), "--counties", path_files["counties"], "--out", str(dev_csv)
    )
    assert r.returncode == 0, r.stderr
    text = dev_csv.read_text()
    assert "1,cluster,A,1,95,-5.000000" in text
    assert "0,cluster,A+B,1,105,5.000000" in text
    assert (tmp_path / "dev.png").exists()

    r = run_cli(
        "deviation", str(out), "--counties", path_files["counties"], "--no-plot"
    )
    assert r.returncode == 0
    assert "average_absolute" in r.stdout


def test_apc(tmp_path):
    x = tmp_path / "x.csv"
    y = tmp_path / "y.csv"
    x.write_text("id,population\nA,100\n")
    y.write_text("id,population\nA,110\n")
    r = run_cli("apc", str(x), str(y))
    assert r.returncode == 0
    assert "apc_percent_per_county,9.523810" in r.stdout
    # symmetric
    r2 = run_cli("apc", str(y), str(x))
    assert r2.stdout == r.stdout
    # mismatched universe
    z = tmp_path / "z.csv"
    z.write_text("id,population\nB,100\n")
    assert run_cli("apc", str(x), str(z)).returncode == 2


def test_verify(path_files):
    r = run_cli(
        "verify", "--districts", "2",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"], "--quiet",
    )
    assert r.returncode == 0, r.stderr
    obj = json.loads(r.stdout)
    assert obj["match"] is True
    assert obj["oracle_solutions"] == obj["solver_solutions"] == 2


def test_stability_with_cache(path_files, tmp_path):
    sol = tmp_path / "initial.json"
    run_cli(
        "solve", "--districts", "2",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--out", str(sol), "--quiet",
    )
    sdir = tmp_path / "series"
    sdir.mkdir()
    (sdir / "2010.csv").write_text("id,population\nA,95\nB,10\nC,95\n")
    (sdir / "2011.csv").write_text("id,population\nA,96\nB,11\nC,93\n")
    cache = tmp_path / "cache"
    out = tmp_path / "stability.csv"
    env = {"CLUSTER_FORGE_CACHE": str(cache)}
    r = run_cli(
        "stability", "--series", str(sdir),
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--districts", "2", "--initial", str(sol),
        "--out", str(out), "--quiet",
        env=env,
    )
    assert r.returncode == 0, r.stderr
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("from,to,dc_percent")
    assert len(lines) == 2
    assert lines[1].startswith("2010,2011,")
    assert (tmp_path / "stability.png").exists()
    assert len(list(cache.glob("*.json"))) == 2
    first = out.read_bytes()
    # second run hits the cache and reproduces the bytes
    r = run_cli(
        "stability", "--series", str(sdir),
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--districts", "2", "--initial", str(sol),
        "--out", str(out), "--quiet",
        env=env,
    )
    assert r.returncode == 0
    assert out.read_bytes() == first


def test_reports_accept_relaxed_files(path_files, tmp_path):
    out = tmp_path / "relaxed.json"
    r = run_cli(
        "relax", "--districts", "2", "--fuzz", "1",
        "--counties", path_files["counties"],
        "--adjacency", path_files["adjacency"],
        "--out", str(out), "--quiet",
    )
    assert r.returncode == 0, r.stderr
    r = run_cli("splits", str(out))
    assert r.returncode == 0
    assert r.stdout.startswith("solution,total_clusters")
    r = run_cli("deviation", str(out), "--counties", path_files["counties"], "--no-plot")
    assert r.returncode == 0
    r = run_cli("compare", str(out), str(out))
    assert r.returncode == 0
    assert "dc_percent,0.000000" in r.stdout


FIXTURES = Path(__file__).parent / "fixtures"


def test_solve_matches_golden_file(tmp_path):
    """Byte-for-byte reproduction of a frozen medium-size solve."""
    base = FIXTURES / "ring12"
    golden = (base / "solutions.json").read_bytes()
    for threads in ("1", "4"):
        out = tmp_path / f"ring12-{threads}.json"
        r = run_cli(
            "solve", "--districts", "15",
            "--counties", str(base / "counties.csv"),
            "--adjacency", str(base / "adjacency.csv"),
            "--threads", threads,
            "--out", str(out), "--quiet",
        )
        assert r.returncode == 0, r.stderr
        assert out.read_bytes() == golden


def test_help_for_every_subcommand():
    for sub in ("solve", "relax", "compare", "apc", "stability", "deviation", "splits", "verify"):
        r = run_cli(sub, "--help")
        assert r.returncode == 0
        assert "--help" in r.stdout or "usage" in r.stdout.lower()
