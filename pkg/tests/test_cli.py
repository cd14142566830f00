import json

import pytest

from vgsolve.cli import main

TRIANGLE = "0 1\n1 2\n0 2\n"
SQUARE = "0 1\n1 2\n2 3\n3 0\n"
BOWTIE = "0 1\n0 2\n1 2\n2 3\n2 4\n3 4\n"


@pytest.fixture
def triangle_file(tmp_path):
    p = tmp_path / "triangle.txt"
    p.write_text(TRIANGLE)
    return str(p)


@pytest.fixture
def square_file(tmp_path):
    p = tmp_path / "square.txt"
    p.write_text(SQUARE)
    return str(p)


def test_check_solvable_exit_zero(triangle_file, capsys):
    assert main(["check", triangle_file]) == 0
    out = capsys.readouterr().out
    assert "finite solvable" in out


def test_check_unsolvable_exit_one(square_file, capsys):
    assert main(["check", square_file]) == 1
    assert "NOT finite solvable" in capsys.readouterr().out


def test_check_malformed_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.txt"
    p.write_text("0 x\n")
    assert main(["check", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_check_missing_file_exit_two(capsys):
    assert main(["check", "/nonexistent/graph.txt"]) == 2


def test_check_json_schema(triangle_file, capsys):
    assert main(["--format", "json", "check", triangle_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["finite_solvable"] is True
    assert payload["rank_jp"] == 18
    assert payload["expected_rank"] == 18
    assert len(payload["seeds"]) == 5
    assert payload["agreement"] == [True] * 5
    assert payload["sigma_min"] > 0
    assert payload["tolerance"] == 1e-8


def test_check_json_deterministic_modulo_timing(triangle_file, capsys):
    main(["--format", "json", "check", triangle_file])
    first = json.loads(capsys.readouterr().out)
    main(["--format", "json", "check", triangle_file])
    second = json.loads(capsys.readouterr().out)
    first.pop("wall_time")
    second.pop("wall_time")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)


def test_check_custom_seeds_and_tolerance(triangle_file, capsys):
    assert main(["--seeds", "1,2,3", "--tolerance", "1e-9",
                 "--format", "json", "check", triangle_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["seeds"] == [1, 2, 3]
    assert payload["tolerance"] == 1e-9


def test_check_export_matrix(triangle_file, tmp_path, capsys):
    out = tmp_path / "out.mtx"
    assert main(["check", triangle_file, "--export-matrix", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("%%MatrixMarket")
    capsys.readouterr()


def test_components_triangle(triangle_file, capsys):
    assert main(["components", triangle_file]) == 0
    assert "1 component(s)" in capsys.readouterr().out


def test_components_bowtie_json(tmp_path, capsys):
    p = tmp_path / "bowtie.txt"
    p.write_text(BOWTIE)
    assert main(["--format", "json", "components", str(p)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["components"]) == 2
    assert payload["components"][0]["nodes"] == [0, 1, 2]
    assert payload["components"][1]["nodes"] == [2, 3, 4]
    assert payload["assignment"] == [0, 0, 0, 1, 1, 1]


def test_components_square(square_file, capsys):
    assert main(["components", square_file]) == 0
    assert "4 component(s)" in capsys.readouterr().out


def test_mine_text_and_csv(capsys):
    assert main(["mine", "5"]) == 0
    assert "2 candidates, 1 finite solvable" in capsys.readouterr().out
    assert main(["--format", "csv", "mine", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,edge_target,candidates,fin_solv"
    assert lines[1] == "5,6,2,1"


def test_mine_witnesses_dir(tmp_path, capsys):
    outdir = tmp_path / "wit"
    assert main(["mine", "4", "--witnesses-dir", str(outdir)]) == 0
    files = sorted(outdir.iterdir())
    assert len(files) == 1
    assert files[0].read_text().count("\n") == 5
    capsys.readouterr()


def test_mine_json(capsys):
    assert main(["--format", "json", "mine", "4"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["candidates"] == 1
    assert payload["fin_solv"] == 1
    assert len(payload["witnesses"]) == 1


def test_sweep_csv(capsys):
    assert main(["--format", "csv", "--seeds", "11", "sweep", "8", "100", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ("n,density_percent,samples,fin_solv_count,"
                        "component_count_min,component_count_max,seed")
    assert lines[1] == "8,100.0,2,2,1,1,11"


def test_sweep_errors(capsys):
    assert main(["sweep", "10", "0", "5"]) == 2


def test_dims_text(square_file, capsys):
    assert main(["dims", square_file]) == 0
    out = capsys.readouterr().out
    assert "59 rows x 48 columns" in out


def test_dims_json(square_file, capsys):
    assert main(["--format", "json", "dims", square_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["e3"] == 59
    assert payload["v3"] == 48
    assert payload["e2"] == 63
    assert payload["v12"] == 64


def test_csv_rejected_for_check(triangle_file, capsys):
    assert main(["--format", "csv", "check", triangle_file]) == 2
