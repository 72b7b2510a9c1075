import csv
import json
import math
import os
import subprocess
import sys

import pytest

from qregret.cli import COHERENT_DEMO_COLUMNS, RUNSPEC_SCHEMA, main, to_json
from qregret.errors import NumericalError

SPECS = {
    "geometry": "model: {name: qubit}\ntheta: [0.3, 0.5]\n",
    "regret": "model: {name: coherent}\ntheta: [0.1, 0.2]\nmeasurement: {name: gaussian, r: 0.0}\n",
    "tradeoff-scan": "model: {name: pure_qubit}\ntheta: [1.0471975511965976, 0.2]\nscan: {grid: 8, starts: 2, max_evals: 50, random_povms: 3}\n",
    "coherent-demo": "nu: 1\ne11_grid: {min: 0.26, max: 2.0, points: 200}\n",
    "dilation-check": "model: {name: qubit}\ntheta: [0.3, 0.5]\nmeasurement: {name: random, outcomes: 3, seed: 4}\n",
    "simulate": "model: {name: coherent}\nmeasurement: {name: gaussian, r: 0.5}\nnu: 1000\ntrials: 50\nseed: 3\n",
}


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _run(tmp_path, command, text, out="out", extra=()):
    spec = _write(tmp_path, f"{command}.yaml", text)
    return main([command, "--spec", spec, "--out", str(tmp_path / out), *extra])


@pytest.mark.parametrize("command", sorted(SPECS))
def test_commands_run_and_are_reproducible(tmp_path, command):
    assert _run(tmp_path, command, SPECS[command], "a") == 0
    assert _run(tmp_path, command, SPECS[command], "b") == 0
    (fa,) = os.listdir(tmp_path / "a")
    a = (tmp_path / "a" / fa).read_bytes()
    assert a == (tmp_path / "b" / fa).read_bytes()
    text = a.decode()
    for bad in ("nan", "NaN", "inf", "Infinity"):
        assert bad not in text
    if fa.endswith(".json"):
        data = json.loads(text)
        assert data["schema_version"] == 1 and data["command"] == command


def test_geometry_output(tmp_path):
    _run(tmp_path, "geometry", SPECS["geometry"])
    data = json.loads((tmp_path / "out" / "geometry.json").read_text())
    assert abs(data["c_tilde"][0][1] - 1.0) <= 1e-9
    assert abs(data["qfim"][0][0] - math.exp(-0.5)) <= 1e-9
    assert set(data) >= {"Q", "qfim", "c", "c_tilde"}


def test_coherent_demo_dominance(tmp_path):
    _run(tmp_path, "coherent-demo", SPECS["coherent-demo"])
    with open(tmp_path / "out" / "coherent-demo.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0].keys()) == COHERENT_DEMO_COLUMNS
    assert len(rows) == 200
    for row in rows:
        if row["regret_bound_e22"] == "":
            continue
        b = float(row["regret_bound_e22"])
        for col in COHERENT_DEMO_COLUMNS[2:]:
            if row[col] != "":
                assert b >= float(row[col])


def test_floats_round_trip(tmp_path):
    _run(tmp_path, "dilation-check", SPECS["dilation-check"])
    text = (tmp_path / "out" / "dilation-check.json").read_text()
    data = json.loads(text)
    assert data["max_abs_gap"] <= 1e-8 and data["commutator_norm"] <= 1e-10 and data["completion_gap"] <= 1e-9
    x = 0.1 + 0.2
    assert float(to_json(x)) == x
    with pytest.raises(NumericalError):
        to_json([1.0, float("nan")])


def test_seed_override_changes_simulation(tmp_path):
    _run(tmp_path, "simulate", SPECS["simulate"], "a")
    _run(tmp_path, "simulate", SPECS["simulate"], "b", ["--seed", "4"])
    a = json.loads((tmp_path / "a" / "simulate.json").read_text())
    b = json.loads((tmp_path / "b" / "simulate.json").read_text())
    assert a["seed"] == 3 and b["seed"] == 4
    assert a["empirical_cov"] != b["empirical_cov"]
    assert set(a) >= {"empirical_cov", "eq8_margins", "eq13_margin", "standard_errors"}


@pytest.mark.parametrize("text", [
    "model: {name: qubit, colour: red}\ntheta: [0.3, 0.5]\n",
    "model: {name: qubit}\ntheta: [0.3, 0.5]\nbogus: 1\n",
    "model: {name: qubit\n",
    "model: {name: nosuchmodel}\ntheta: [0.3, 0.5]\n",
    "model: {name: qubit}\ntheta: [0.3]\n",
    "model: {name: qubit}\n",
    "command: regret\nmodel: {name: qubit}\ntheta: [0.3, 0.5]\n",
])
def test_invalid_specs_exit_1_without_files(tmp_path, text, capsys):
    assert _run(tmp_path, "geometry", text) == 1
    assert not (tmp_path / "out").exists()
    assert "qregret:" in capsys.readouterr().err


def test_missing_spec_file(tmp_path):
    assert main(["geometry", "--spec", str(tmp_path / "nope.yaml")]) == 1


def test_numerical_error_exit_2(tmp_path):
    text = ("model: {name: qubit}\ntheta: [0.3, 0.5]\nmeasurement: {name: uninformative}\n"
            "mle_grid: [[0, 1, 5], [0.1, 1, 5]]\nnu: 100\ntrials: 4\n")
    assert _run(tmp_path, "simulate", text) == 2
    assert not (tmp_path / "out").exists() or not os.listdir(tmp_path / "out")


def test_schema_rejects_unknown_top_level():
    assert RUNSPEC_SCHEMA["additionalProperties"] is False


def test_module_entry_point(tmp_path):
    spec = _write(tmp_path, "g.yaml", SPECS["geometry"])
    proc = subprocess.run([sys.executable, "-m", "qregret", "geometry", "--spec", spec, "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "geometry.json").exists()
