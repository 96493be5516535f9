from __future__ import annotations

import json
import subprocess
import sys

import numpy as np

from bulktri.cli import main
from bulktri.edgeio import read_edge_list
from bulktri.oracle import exact_triangle_count


def test_gen_and_exact(tmp_path, capsys):
    path = tmp_path / "g.txt"
    assert main(["gen", "gnp", str(path), "-n", "40", "--p", "0.3", "--seed", "2"]) == 0
    edges = read_edge_list(path)
    assert main(["exact", str(path)]) == 0
    out = capsys.readouterr().out
    assert int(out.strip()) == exact_triangle_count(edges.tolist())
    assert main(["exact", str(path), "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["edges"] == len(edges)


def test_gen_powerlaw(tmp_path):
    path = tmp_path / "pl.txt"
    assert main(["gen", "powerlaw", str(path), "-n", "500", "--exponent", "2.2", "--min-degree", "2"]) == 0
    assert len(read_edge_list(path)) > 400


def test_count_json(tmp_path, capsys):
    path = tmp_path / "g.txt"
    main(["gen", "gnp", str(path), "-n", "60", "--p", "0.3"])
    capsys.readouterr()
    assert main(["count", str(path), "-r", "2e4", "-s", "100", "-t", "2", "--exact", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert len(d["per_trial_estimates"]) == 2
    assert d["exact_triangles"] == exact_triangle_count(read_edge_list(path).tolist())
    assert d["mean_deviation_percent"] < 25
    assert d["estimators"] == 20_000 and d["failed_trials"] == []
    for key in ("final_estimate", "processing_time", "io_time", "throughput_edges_per_sec", "config"):
        assert key in d


def test_count_text(tmp_path, capsys):
    path = tmp_path / "g.txt"
    path.write_text("1 2\n2 3\n3 1\n")
    assert main(["count", str(path), "-r", "1000"]) == 0
    assert "estimate" in capsys.readouterr().out


def test_bench(tmp_path, capsys):
    path = tmp_path / "g.txt"
    main(["gen", "gnp", str(path), "-n", "60", "--p", "0.3"])
    capsys.readouterr()
    assert main(["bench", str(path), "-r", "1000", "--values", "10,100", "--format", "json"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert [r["value"] for r in d["rows"]] == [10, 100]
    assert main(["bench", str(path), "-r", "1000", "--sweep", "workers", "--values", "1,2"]) == 0
    assert "speedup" in capsys.readouterr().out


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["count", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2\nfoo bar\n")
    assert main(["exact", str(bad)]) == 2
    assert ":2:" in capsys.readouterr().err
    loop = tmp_path / "loop.txt"
    loop.write_text("1 2\n2 2\n")
    assert main(["count", str(loop), "-r", "10"]) == 1
    assert main(["count", str(loop), "-r", "0"]) == 2


def test_module_entry_point(tmp_path):
    path = tmp_path / "g.txt"
    path.write_text("1 2\n2 3\n3 1\n")
    out = subprocess.run([sys.executable, "-m", "bulktri", "exact", str(path)],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "1"
