import json

import numpy as np
import pytest

from regulattice import RunConfig, regular_partition
from regulattice.cli import run_cli
from regulattice.errors import ParseError
from regulattice.fileio import SCHEMA_VERSION, build_report, dumps_report, load_matrix, loads_report, \
    parse_matrix, trajectory_csv


def test_parse_examples():
    a, graph = parse_matrix("1,0\n0,1\n", "csv-dense")
    assert np.array_equal(a.values, np.eye(2)) and not graph
    b, _ = parse_matrix("2 2 1\n1 2 -3.5\n", "coordinate-triplet")
    assert np.array_equal(b.values, [[0, -3.5], [0, 0]])
    c, graph = parse_matrix("1 2\n2 3\n", "edge-list")
    assert graph and np.array_equal(c.values, [[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    d, _ = parse_matrix("1 2 0.5\n", "edge-list")
    assert d.values[1, 0] == 0.5


@pytest.mark.parametrize("text,fmt,line", [
    ("1,2\n3\n", "csv-dense", 2),
    ("1,x\n", "csv-dense", 1),
    ("1,inf\n", "csv-dense", 1),
    ("2 2\n", "coordinate-triplet", 1),
    ("2 2 2\n1 1 1\n1 1 2\n", "coordinate-triplet", 3),
    ("2 2 1\n3 1 1\n", "coordinate-triplet", 2),
    ("2 2 1\n1 1\n", "coordinate-triplet", 2),
    ("1 2\n3 3\n", "edge-list", 2),
    ("1 2\n2 1\n", "edge-list", 2),
    ("0 2\n", "edge-list", 1),
    ("1 2 3 4\n", "edge-list", 1),
])
def test_parse_errors_carry_line_numbers(text, fmt, line):
    with pytest.raises(ParseError) as exc:
        parse_matrix(text, fmt)
    assert exc.value.lineno == line
    assert f"line {line}" in str(exc.value)


def test_parse_structural_errors():
    for text, fmt in [("", "csv-dense"), ("", "coordinate-triplet"), ("2 2 3\n1 1 1\n", "coordinate-triplet"), ("", "edge-list")]:
        with pytest.raises(ParseError):
            parse_matrix(text, fmt)
    with pytest.raises(ValueError):
        parse_matrix("1\n", "matrix-market")


def test_comments_and_blank_lines_skipped(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("# header\n1,2\n\n3,4\n")
    a, _ = load_matrix(p, "csv-dense")
    assert a.shape == (2, 2)


def test_report_round_trip(rng):
    a = (rng.random((60, 60)) < 0.4).astype(float)
    res = regular_partition(a, RunConfig(0.3))
    rep = build_report(res, [a])
    assert rep["schema_version"] == SCHEMA_VERSION
    assert loads_report(dumps_report(rep)) == rep
    assert dumps_report(loads_report(dumps_report(rep))) == dumps_report(rep)
    flat = sorted(x for c in rep["partition"]["rows"]["classes"] for x in c) + rep["partition"]["rows"]["exceptional"]
    assert sorted(flat) == list(range(1, 61))
    k, l = res.partition.shape
    assert np.array(rep["density_tables"][0]).shape == (k, l)
    with pytest.raises(ParseError):
        loads_report(json.dumps({"schema_version": 99}))


def test_trajectory_lines(rng):
    a = (rng.random((60, 60)) < 0.4).astype(float)
    res = regular_partition(a, RunConfig(0.3))
    lines = trajectory_csv(res).splitlines()
    assert lines[0].startswith("iteration,phi,")
    assert len(lines) == 1 + len(res.iterations)


def _write(tmp_path, name, arr):
    p = tmp_path / name
    np.savetxt(p, arr, fmt="%g", delimiter=",")
    return p


def test_cli_constant_input(tmp_path, capsys):
    p = _write(tmp_path, "const.csv", np.ones((12, 12)))
    assert run_cli(["--input", str(p), "--epsilon", "0.5", "--min-classes", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["iterations"] == [] and rep["status"] == "CertifiedRegular"


def test_cli_byte_identical(tmp_path, rng):
    p = _write(tmp_path, "a.csv", (rng.random((80, 80)) < 0.3).astype(int))
    outs = []
    for i in range(2):
        r, t = tmp_path / f"r{i}.json", tmp_path / f"t{i}.csv"
        assert run_cli(["--input", str(p), "--epsilon", "0.3", "--seed", "7", "--report", str(r), "--trajectory", str(t)]) == 0
        outs.append((r.read_bytes(), t.read_bytes()))
    assert outs[0] == outs[1]


def test_cli_star_graph(tmp_path):
    p = tmp_path / "star.edges"
    p.write_text("".join(f"1 {v}\n" for v in range(2, 201)))
    r = tmp_path / "r.json"
    assert run_cli(["--input", str(p), "--format", "edge-list", "--graph", "--epsilon", "0.5", "--report", str(r)]) == 0
    rep = json.loads(r.read_text())
    assert max(rep["exceptional_fractions"]) < 0.5 and rep["graph"]["is_regular"]


def test_cli_modes(tmp_path, rng):
    a = (rng.random((64, 64)) < 0.4).astype(int)
    pa, pb = _write(tmp_path, "a.csv", a), _write(tmp_path, "b.csv", 1 - a)
    r = tmp_path / "r.json"
    assert run_cli(["--input", str(pa), "--multi", str(pb), "--epsilon", "0.4", "--report", str(r)]) in (0, 2)
    assert len(json.loads(r.read_text())["density_tables"]) == 2
    assert run_cli(["--input", str(pa), "--symmetric", "--epsilon", "0.5", "--report", str(r), "--dense"]) == 0
    rep = json.loads(r.read_text())
    assert rep["partition"]["symmetric"] and rep["config"]["dense_mode"]


def test_cli_shortfall_exit_code(tmp_path, rng):
    # odd 13-element classes leave no room to shrink witnesses at eps = 0.5
    p = _write(tmp_path, "a.csv", (rng.random((40, 40)) < 0.3).astype(int))
    r = tmp_path / "r.json"
    assert run_cli(["--input", str(p), "--epsilon", "0.5", "--report", str(r)]) == 2
    assert json.loads(r.read_text())["status"] == "QuotaShortfall"


def test_cli_iteration_cap_exit_code(tmp_path, rng):
    p = _write(tmp_path, "a.csv", (rng.random((100, 100)) < 0.5).astype(int))
    assert run_cli(["--input", str(p), "--epsilon", "0.3", "--max-iterations", "0", "--report", str(tmp_path / "r.json")]) == 2


def test_cli_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert run_cli(["--input", str(bad), "--epsilon", "0.3"]) == 1
    assert "line 2" in capsys.readouterr().err
    assert run_cli(["--input", str(tmp_path / "missing.csv"), "--epsilon", "0.3"]) == 1
    good = _write(tmp_path, "g.csv", np.triu(np.ones((8, 8)), 1))
    assert run_cli(["--input", str(good), "--graph", "--epsilon", "0.5"]) == 1
    assert run_cli(["--input", str(good), "--graph", "--symmetric", "--epsilon", "0.5"]) == 1
    assert run_cli(["--epsilon", "0.3"]) == 1
    assert run_cli(["--input", str(good), "--epsilon", "0.9"]) == 1
