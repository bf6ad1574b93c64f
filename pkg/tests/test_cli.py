import csv
import json
import math
from pathlib import Path

import pytest

from affdim.cli import main
from affdim.presets import ANTIDIAGONAL_S_LOWER, ANTIDIAGONAL_S_UPPER

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out), "--no-timestamp", "--threads", "1"])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def write(tmp_path, doc, name="job.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def test_affinity_dim_moran(tmp_path):
    code, doc = run(tmp_path, "affinity-dim", "--config", str(CONFIGS / "moran3.json"))
    assert code == 0
    assert doc["schema"] == "affdim.result/1" and doc["command"] == "affinity-dim"
    assert doc["result"]["value"] == pytest.approx(1.0, abs=1e-4)
    assert "timestamp" not in doc


def test_proj_affinity_dim_diagonal(tmp_path):
    code, doc = run(tmp_path, "proj-affinity-dim", "--config", str(CONFIGS / "diagonal_pair.json"))
    assert code == 0
    assert doc["result"]["value"] == pytest.approx(0.78788, abs=1e-3)
    assert doc["result"]["line_projection"]["value"] == pytest.approx(0.78788, abs=1e-3)


def test_pressure_curve_writes_table(tmp_path):
    code, doc = run(tmp_path, "pressure-curve", "--config", str(CONFIGS / "antidiagonal.json"), "--max-n", "4")
    assert code == 0
    rows = list(csv.reader(open(tmp_path / doc["side_files"]["tables"]["pressure"])))
    assert rows[0][:2] == ["s", "phi_rate"]
    assert float(rows[1][1]) == pytest.approx(math.log(3))


def test_lyapunov_command(tmp_path):
    code, doc = run(tmp_path, "lyapunov", "--config", str(CONFIGS / "antidiagonal.json"), "--trials", "4")
    assert code == 0
    assert doc["result"]["exact"]["exponents"] == pytest.approx([math.log(0.4), math.log(0.2)])
    assert doc["result"]["entropy"] == pytest.approx(math.log(2) / 2)


def test_criteria_command(tmp_path):
    code, doc = run(tmp_path, "criteria", "--config", str(CONFIGS / "antidiagonal.json"))
    assert code == 0
    res = doc["result"]
    assert res["antidiagonal_nonexact"]["verdict"] == "holds"
    assert res["planar_measure_drop"]["evidence"]["nonexact"] == "holds"
    assert res["distinct_value_bounds"]["measure_bound"] == 2


def test_irreducible_command(tmp_path):
    code, doc = run(tmp_path, "irreducible", "--config", str(CONFIGS / "antidiagonal.json"), "--q", "1")
    assert code == 0 and doc["result"]["irreducible"] is True


def test_s_spectrum_and_figures(tmp_path):
    cfg = json.loads((CONFIGS / "antidiagonal.json").read_text())
    cfg["estimator"] = {"samples": 12, "path_length": 600}
    code, doc = run(tmp_path, "s-spectrum", "--config", write(tmp_path, cfg), "--figures")
    assert code == 0
    assert doc["result"]["samples"] == 12
    files = doc["side_files"]
    assert files["tables"] == {"samples": "out.samples.csv", "histogram": "out.histogram.csv"}
    assert files["figures"] == {"histogram": "out.histogram.png"}
    for name in list(files["tables"].values()) + list(files["figures"].values()):
        assert (tmp_path / name).stat().st_size > 0


def test_box_experiment_and_local_dim(tmp_path):
    cfg = json.loads((CONFIGS / "moran3.json").read_text())
    cfg["estimator"] = {"points": 20000, "trials": 1, "centers": 20}
    path = write(tmp_path, cfg)
    code, doc = run(tmp_path, "box-experiment", "--config", path, name="box.json")
    assert code == 0 and len(doc["result"]["rows"]) == 1
    code, doc = run(tmp_path, "local-dim", "--config", path, name="local.json")
    assert code == 0 and doc["result"]["median_slope"] > 0


def test_example_command(tmp_path):
    code, doc = run(tmp_path, "example-8-1")
    assert code == 0
    res = doc["result"]
    assert res["s_bar"] == pytest.approx(ANTIDIAGONAL_S_UPPER, abs=5e-3)
    assert res["s_lower"] == pytest.approx(ANTIDIAGONAL_S_LOWER, abs=5e-3)
    assert abs(res["entropy"] - math.log(2) / 2) <= 1e-12


def test_output_is_deterministic(tmp_path):
    args = ["s-spectrum", "--config", str(CONFIGS / "antidiagonal.json"), "--seed", "3"]
    _, a = run(tmp_path, *args, name="a.json")
    _, b = run(tmp_path, *args, name="b.json")
    a.pop("side_files"), b.pop("side_files")
    assert a == b
    assert (tmp_path / "a.samples.csv").read_bytes() == (tmp_path / "b.samples.csv").read_bytes()


def test_stdout_when_no_out(capsys):
    assert main(["irreducible", "--config", str(CONFIGS / "antidiagonal.json"), "--q", "2", "--no-timestamp"]) == 0
    assert json.loads(capsys.readouterr().out)["result"]["irreducible"] is True


@pytest.mark.parametrize(
    "doc, field",
    [
        ("{not json", "<file>"),
        ({"measure": "uniform"}, "matrices"),
        ({"matrices": [[[1.5, 0], [0, 0.2]]]}, "matrices[0]"),
        ({"matrices": [[[0.5, 0], [0, 0.2]]], "measure": {"bernoulli": {"p": [0.5, 0.5]}}}, "measure.bernoulli.p"),
        ({"matrices": [[[0.5, 0], [0, 0.2]]] * 2, "measure": {"markov": {"p": [0.5, 0.5], "P": [[0.5, 0.6], [0.5, 0.5]]}}}, "measure.markov.P[0]"),
        ({"matrices": [[[0.5, 0], [0, 0.2]]], "estimator": {"depth": 1.5}}, "estimator.depth"),
        ({"matrices": [[[0.5, 0], [0, 0.2]]], "estimator": {"bogus": 1}}, "estimator.bogus"),
        ({"matrices": [[[0.5, 0], [0, 0.2]]], "subspace": [[1, 0, 0]]}, "subspace"),
    ],
)
def test_invalid_config_exit_code(tmp_path, capsys, doc, field):
    code, _ = run(tmp_path, "affinity-dim", "--config", write(tmp_path, doc))
    assert code == 1
    assert f"invalid config: {field}:" in capsys.readouterr().err


def test_missing_config_file(tmp_path, capsys):
    code, _ = run(tmp_path, "affinity-dim", "--config", str(tmp_path / "nope.json"))
    assert code == 1


def test_resource_limit_exit_code(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("AFFDIM_BUDGET", "1000")
    code, _ = run(tmp_path, "affinity-dim", "--config", str(CONFIGS / "moran3.json"), "--max-n", "12")
    assert code == 2
    assert "AFFDIM_BUDGET" in capsys.readouterr().err
