import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from hbm.body import Discretization
from hbm.cli import SpecError, evaluate_density, load_schema, main, parse_body

SMALL2 = ["--dim", "2", "--resolution", "128", "--degree", "32"]
SMALL3 = ["--dim", "3", "--resolution", "32", "--degree", "8"]


def _run(tmp_path, name, argv):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, out


def _report(out):
    return json.loads((out / "report.json").read_text())


def test_spectrum_report(tmp_path):
    code, out = _run(tmp_path, "spec", ["spectrum", "--body", "ball"] + SMALL3)
    assert code == 0
    rep = _report(out)
    assert rep["command"] == "spectrum" and rep["spec"]["body"] == "ball"
    assert rep["lambda1"] == pytest.approx(2.0, abs=1e-9) and rep["multiplicity"] == 3
    assert rep["lambda1_even"] == pytest.approx(6.0, abs=1e-9)
    with open(out / "tables" / "spectrum.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["subspace"] for r in rows} == {"even", "odd"}
    assert (out / "tables" / "spectrum.csv").read_bytes().count(b"\r\n") == len(rows) + 1


@pytest.mark.parametrize("argv", [
    ["isotropize", "--body", "ellipsoid:2,0.5"],
    ["directions", "--body", "rounded_lq:6,0.15", "--samples", "32"],
    ["solve", "--p", "0.5", "--init", "ellipsoid:1.3"],
    ["scan", "--f", "1+0.2*Y20", "--p=-0.5,-1"],
    ["nonunique", "--body", "ellipsoid:2", "--p", "0.5"],
], ids=lambda a: a[0])
def test_commands_write_valid_reports(tmp_path, argv):
    import jsonschema

    code, out = _run(tmp_path, argv[0], argv + SMALL2)
    if argv[0] == "nonunique":
        # ellipsoids satisfy lambda_1e = 2n >= n - p: no second solution is predicted
        assert code == 2
        return
    assert code == 0
    rep = _report(out)
    jsonschema.validate(rep, load_schema(argv[0]))
    assert list((out / "tables").iterdir())


def test_supercritical_command(tmp_path):
    code, out = _run(tmp_path, "super", ["supercritical", "--t", "2,4", "--resolution", "128", "--degree", "2"])
    assert code == 0
    rep = _report(out)
    assert rep["p"] == -3.5 and rep["minus_F_increasing"]
    assert [r["t"] for r in rep["rows"]] == [2.0, 4.0]


def test_reports_are_byte_identical(tmp_path):
    argv = ["solve", "--p", "0.5,-1", "--init", "random_even:3"] + SMALL2
    _, a = _run(tmp_path, "a", argv)
    _, b = _run(tmp_path, "b", argv)
    for rel in ["report.json", "tables/solve.csv", "tables/objective_trace.csv"]:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


def test_solution_body_round_trips(tmp_path):
    code, out = _run(tmp_path, "s", ["solve", "--p", "0.5", "--f", "1+0.3*Y20"] + SMALL2)
    assert code == 0
    path = out / "bodies" / "solution_p+0.5.json"
    code, out2 = _run(tmp_path, "t", ["spectrum", "--body", str(path)] + SMALL2)
    assert code == 0
    assert _report(out2)["lambda1"] == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("argv", [
    ["spectrum", "--body", "foo"],
    ["spectrum", "--body", "ellipsoid:1,2,3,4"],
    ["solve", "--p", "1.5"],
    ["solve", "--p", "0.5", "--f", "import os"],
    ["solve", "--p", "0.5", "--f", "x"],
    ["supercritical", "--p", "-1"],
    ["spectrum", "--body", "ball", "--symmetry", "reflections"],
    ["nonunique", "--body", "rounded_lq", "--refine", "64"],
    ["spectrum"],
])
def test_invalid_specs_exit_2(tmp_path, argv):
    code, _ = _run(tmp_path, "bad", argv + SMALL2)
    assert code == 2


def test_numerical_failures_exit_3(tmp_path):
    code, out = _run(tmp_path, "nc", ["solve", "--p", "0.5", "--init", "ellipsoid:2", "--max-iter", "1"] + SMALL2)
    assert code == 3
    assert _report(out)["all_converged"] is False
    code, _ = _run(tmp_path, "cf", ["spectrum", "--body", "random_even:1,2.0"] + SMALL2)
    assert code == 3


def test_console_entry_point(tmp_path):
    out = tmp_path / "ep"
    proc = subprocess.run([sys.executable, "-m", "hbm.cli", "spectrum", "--body", "ball", *SMALL2, "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert _report(out)["lambda1"] == pytest.approx(1.0)


def test_density_parser():
    g2 = Discretization(2, 128, 32).grid
    th = np.arctan2(g2.nodes[:, 1], g2.nodes[:, 0])
    assert np.allclose(evaluate_density("Y20", g2), np.sqrt(2) * np.cos(2 * th))
    assert np.allclose(evaluate_density("Y31", g2), np.sqrt(2) * np.sin(3 * th))
    assert np.allclose(evaluate_density("1 + x**2 - 2*pi", g2), 1 + g2.nodes[:, 0] ** 2 - 2 * np.pi)
    g3 = Discretization(3, 32, 8).grid
    for name in ("Y20", "Y3_m2", "Y4_3"):
        v = evaluate_density(name, g3)
        assert float(g3.integrate(v * v)) / g3.area == pytest.approx(1.0, rel=1e-10)
    z = g3.nodes[:, 2]
    assert np.allclose(evaluate_density("Y20", g3), np.sqrt(5) * (3 * z**2 - 1) / 2)
    for bad in ("__import__('os')", "x.real", "Y5_9", "foo(x)", "log(x)"):
        with pytest.raises(SpecError):
            evaluate_density(bad, g3)


def test_parse_body_defaults():
    d = Discretization(3, 32, 8)
    E = parse_body("ellipsoid:2,0.5", d)
    # semi-axes (2, 0.5, 1); degree 8 resolves the volume only approximately
    assert E.volume == pytest.approx(4 * np.pi / 3, rel=1e-5)
    assert parse_body("rounded_lq", d).meta["kind"] == "rounded_lq"
