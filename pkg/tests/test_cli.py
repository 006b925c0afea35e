import json
import subprocess
import sys

from mlqls.cli import main
from mlqls.graphs import load_graph


def test_gen_then_solve(tmp_path, capsys):
    gpath = tmp_path / "g.graph"
    assert main(["gen", "--planted", "200,2,0.1,0.01", "--seed", "3",
                 "--out", str(gpath)]) == 0
    g = load_graph(str(gpath))
    assert g.n == 200

    out = tmp_path / "run.json"
    rc = main([
        "solve", "--graph", str(gpath), "--format", "metis",
        "--problem", "mod", "--k-sub", "10", "--solver", "exhaustive",
        "--seed", "1", "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema_version"] == 1
    assert doc["problem"] == "modularity"
    assert doc["failed"] is False
    assert doc["modularity"] is not None and doc["modularity"] <= 0.5
    assert len(doc["spins"]) == 200
    assert doc["total_solver_calls"] == (
        sum(doc["level_iterations"]) + int(doc["coarsest_direct"]))


def test_solve_gp_with_precision_and_hierarchy_dump(tmp_path):
    gpath = tmp_path / "g.graph"
    main(["gen", "--planted", "120,2,0.15,0.02", "--seed", "5",
          "--out", str(gpath)])
    out = tmp_path / "run.json"
    hpath = tmp_path / "h.jsonl"
    rc = main([
        "solve", "--graph", str(gpath), "--problem", "gp", "--k-sub", "12",
        "--solver", "exhaustive", "--seed", "0", "--precision", "separate",
        "--levels", "1025", "--dump-hierarchy", str(hpath),
        "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["problem"] == "gp"
    assert doc["modularity"] is None
    levels = [json.loads(line) for line in hpath.read_text().splitlines()]
    assert levels[0]["n"] == 120
    assert levels[-1]["n"] <= 12 or doc["stalled_coarsening"]
    assert doc["hierarchy_depth"] == len(levels)


def test_sweep_cli(tmp_path):
    gpath = tmp_path / "g.graph"
    main(["gen", "--planted", "60,2,0.3,0.03", "--seed", "7",
          "--out", str(gpath)])
    cfg = tmp_path / "sweep.toml"
    cfg.write_text(f"""
[sweep]
problem = "modularity"
k_sub = [6]
solvers = ["exhaustive"]
seeds = [0, 1]

[[instances]]
name = "g"
path = "{gpath}"
""")
    out_csv = tmp_path / "res.csv"
    rc = main(["sweep", "--config", str(cfg), "--out", str(out_csv)])
    assert rc == 0
    assert out_csv.exists()
    assert (tmp_path / "res_summary.json").exists()
    assert len(out_csv.read_text().strip().splitlines()) == 3  # header + 2


def test_gen_rejects_bad_spec(tmp_path):
    rc = main(["gen", "--planted", "10,3", "--seed", "0",
               "--out", str(tmp_path / "x.graph")])
    assert rc == 2


def test_external_solver_via_cli(tmp_path):
    gpath = tmp_path / "g.graph"
    main(["gen", "--planted", "40,2,0.4,0.05", "--seed", "2",
          "--out", str(gpath)])
    out = tmp_path / "run.json"
    cmd = f"{sys.executable} -m mlqls.stdin_solver --mode exhaustive"
    rc = main([
        "solve", "--graph", str(gpath), "--problem", "mod", "--k-sub", "8",
        "--solver", "external", "--external-cmd", cmd, "--seed", "0",
        "--out", str(out),
    ])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["failed"] is False
    assert doc["solver"] == "external"


def test_console_entry_point(tmp_path):
    # the installed script must resolve and print usage
    proc = subprocess.run([sys.executable, "-m", "mlqls.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "solve" in proc.stdout and "sweep" in proc.stdout
