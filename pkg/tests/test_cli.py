import csv
import io
import json

import numpy as np
import pytest

from mspm.cli import main, parse_flattening
from mspm.io import read_tensor, write_tensor

from conftest import nonorth_sym


def test_parse_flattening():
    assert parse_flattening("1,1") == (1, 1)
    assert parse_flattening("1,1,0;1,0,1") == ((1, 1, 0), (1, 0, 1))
    with pytest.raises(ValueError):
        parse_flattening("1;2;3")


def test_plan_stdout(capsys):
    assert main(["plan", "--symmetry", "4:25,1:14"]) == 0
    out, err = capsys.readouterr()
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["f"] for r in rows} >= {"1,1", "2,1"}
    assert "optimal: 2,1" in err


def test_plan_bad_symmetry(capsys):
    assert main(["plan", "--symmetry", "x:y"]) == 3


def test_synth_then_decompose(tmp_path):
    t = tmp_path / "t.pstf"
    truth = tmp_path / "truth.json"
    out = tmp_path / "out.json"
    assert main(["synth", "--symmetry", "2:8,1:5", "--rank", "4", "--seed", "1", "--out", str(t), "--truth", str(truth)]) == 0
    assert read_tensor(t).symmetry.blocks == ((2, 8), (1, 5))
    assert json.loads(truth.read_text())["rank"] == 4
    assert main(["decompose", "--in", str(t), "--rank", "4", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert res["rank"] == 4 and res["symmetry"] == "2:8,1:5"
    assert res["diagnostics"]["relative_error"] < 1e-10


def test_decompose_paired_flattening(tmp_path):
    t = tmp_path / "t.pstf"
    out = tmp_path / "out.json"
    main(["synth", "--symmetry", "1:5,1:5,1:5", "--rank", "3", "--out", str(t)])
    assert main(["decompose", "--in", str(t), "--flattening", "1,1,0;1,0,1", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["diagnostics"]["plan"]["partner"] == [1, 0, 1]


def test_decompose_json_input(tmp_path):
    t = tmp_path / "t.json"
    write_tensor(nonorth_sym(), t)
    out = tmp_path / "o.json"
    assert main(["decompose", "--in", str(t), "--out", str(out), "--shift-policy", "thm51"]) == 0
    lams = [c["lambda"] for c in json.loads(out.read_text())["components"]]
    assert np.allclose(lams, 2 / np.sqrt(3), atol=1e-8)


def test_decompose_partial_exit(tmp_path):
    t = tmp_path / "t.pstf"
    main(["synth", "--symmetry", "2:6,1:4", "--rank", "3", "--out", str(t)])
    out = tmp_path / "o.json"
    code = main(["decompose", "--in", str(t), "--rank", "3", "--tol", "1e-300", "--max-iters", "2", "--out", str(out)])
    assert code == 2


def test_input_errors(tmp_path):
    assert main(["decompose", "--in", str(tmp_path / "missing.pstf"), "--out", str(tmp_path / "o.json")]) == 3
    bad = tmp_path / "bad.pstf"
    bad.write_bytes(b"nope")
    assert main(["decompose", "--in", str(bad), "--out", str(tmp_path / "o.json")]) == 3
    t = tmp_path / "t.pstf"
    write_tensor(nonorth_sym(), t)
    assert main(["decompose", "--in", str(t), "--flattening", "2,2", "--out", str(tmp_path / "o.json")]) == 3
    assert main(["bogus"]) == 3


def test_bench(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"symmetry": "2:6,1:4", "rank": 3, "seed": 2, "repetitions": 2}))
    out = tmp_path / "m.csv"
    assert main(["bench", "--config", str(cfg), "--out", str(out), "--no-timing"]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert len(rows) == 2 and rows[0]["wall_time"] == "0.0"
    cfg.write_text("{}")
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 3


def test_basin(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["basin", "--grid", "5", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 26
    assert main(["basin", "--grid", "0", "--out", str(out)]) == 3
