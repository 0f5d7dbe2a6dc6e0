import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from angmom import cli, nbody

SVG_NS = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out) if out.strip() else None


def write_config(tmp_path, c, name="config.json"):
    doc = {"masses": c.masses.tolist(), "positions": c.positions.T.tolist(), "dim": c.dim}
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def svg_groups(path, cls):
    root = ET.parse(path).getroot()
    return [g for g in root.iter() if g.get("class") == cls]


def test_certify_exit_codes(tmp_path, capsys, rng):
    tri = write_config(tmp_path, nbody.equilateral_triangle(), "tri.json")
    code, doc = run_json(capsys, "certify", "--input", tri)
    assert code == 0 and doc["status"] == "central"
    assert doc["multiplier"] == pytest.approx(-3.0)
    assert doc["tol"] == 1e-8

    c = nbody.equilateral_triangle()
    bent = nbody.Configuration(c.positions + 0.05 * rng.normal(size=c.positions.shape), c.masses)
    code, doc = run_json(capsys, "certify", "--input", write_config(tmp_path, bent, "bent.json"))
    assert code == 1 and doc["status"] == "neither"

    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    code, _, err = run(capsys, "certify", "--input", str(bad))
    assert code == 2 and "malformed" in err

    col = tmp_path / "col.json"
    col.write_text(json.dumps({"masses": [1, 1], "positions": [[0, 0], [0, 0]], "dim": 2}))
    code, _, err = run(capsys, "certify", "--input", str(col))
    assert code == 3 and "collide" in err

    code, _, _ = run(capsys, "certify")
    assert code == 2
    code, _, _ = run(capsys, "certify", "--input", str(tmp_path / "missing.json"))
    assert code == 2


def test_freq_examples(capsys, tmp_path):
    code, doc = run_json(capsys, "freq", "--sigma", "4,3,2,1", "--pairing", "1-2,3-4")
    assert code == 0 and doc["nu"] == [7.0, 3.0] and doc["trace_residual"] == 0.0
    code, doc = run_json(capsys, "freq", "--sigma", "4,3,2,1", "--phi", "0", "--theta", "0")
    assert code == 0 and np.allclose(doc["nu"], [6, 4])
    code, doc = run_json(capsys, "freq", "--sigma", "2,2,2,0", "--random", "--samples", "20", "--seed", "9")
    assert code == 0
    assert np.allclose(doc["frequencies"], [[4.0, 2.0]] * 20, atol=1e-12)
    assert doc["max_trace_residual"] <= 1e-9 * 6
    code, doc = run_json(capsys, "freq", "--sigma", "4,3,2,1")
    assert np.allclose(doc["nu"], [6, 4]) and doc["structure"]["kind"] == "standard"


def test_freq_structure_file(capsys, tmp_path):
    path = tmp_path / "rho.json"
    phi = 0.7
    rho = [[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]]
    path.write_text(json.dumps({"rho": rho, "P": np.eye(4).tolist()}))
    code, doc = run_json(capsys, "freq", "--sigma", "4,3,2,1", "--structure", str(path))
    code2, doc2 = run_json(capsys, "freq", "--sigma", "4,3,2,1", "--phi", str(phi), "--theta", "0")
    assert code == code2 == 0
    assert np.allclose(doc["nu"], doc2["nu"], atol=1e-12)


def test_freq_from_configuration_pads_odd_dimension(capsys, tmp_path):
    path = write_config(tmp_path, nbody.regular_tetrahedron())
    code, doc = run_json(capsys, "freq", "--input", path, "--random", "--seed", "3")
    assert code == 0
    assert doc["sigma"] == pytest.approx([4.0, 4.0, 4.0, 0.0])
    assert np.allclose(doc["frequencies"] if "frequencies" in doc else doc["nu"], [8.0, 4.0], atol=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["freq", "--sigma", "4,3,2,1", "--pairing", "1-2,3-4,5-6"],
        ["freq", "--sigma", "4,3,2,1,0,0", "--phi", "0.1"],
        ["freq", "--sigma", "3,2,1"],
        ["freq", "--sigma", "4,3,2,1", "--input", "x.json"],
        ["freq"],
        ["freq", "--sigma", "4,3,2,1", "--pairing", "1-2,3-4", "--random"],
        ["freq", "--sigma", "a,b"],
        ["freq", "--sigma", "4,3,2,1", "--format", "pdf"],
        ["freq", "--sigma", "4,3,2,1", "--samples", "0"],
        ["nonsense"],
    ],
)
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_freq_csv(capsys):
    code, out, _ = run(capsys, "freq", "--sigma", "4,3,2,1", "--pairing", "1-4,2-3", "--format", "csv")
    assert code == 0
    assert out.splitlines() == ["index,nu_1,nu_2,trace_residual", "0,5.0,5.0,0.0"]


def test_polytope_p2(capsys):
    code, doc = run_json(capsys, "polytope", "--sigma", "4,3,2,1")
    assert code == 0
    assert doc["vertices"] == [[7.0, 3.0], [5.0, 5.0]]
    assert sorted(tuple(b["nu"]) for b in doc["basic_set"]) == [(5.0, 5.0), (6.0, 4.0), (7.0, 3.0)]
    assert len(doc["inequalities"]) == 3


def test_polytope_p3_with_svg(capsys, tmp_path):
    out = tmp_path / "out"
    code, doc = run_json(capsys, "polytope", "--sigma", "21,19,16,14,12,8", "--out", str(out), "--format", "json,svg")
    assert code == 0
    assert len(doc["inequalities"]) == 12
    assert [b["label"] for b in doc["basic_set"]] == list(range(1, 16))
    groups = svg_groups(out / "polytope.svg", "basic-point")
    assert len(groups) == 15
    assert sorted(int(g.get("data-label")) for g in groups) == list(range(1, 16))
    assert json.loads((out / "polytope.json").read_text()) == doc


def test_polytope_single_point_and_guard(capsys):
    code, doc = run_json(capsys, "polytope", "--sigma", "2,2,2,2,2,2")
    assert code == 0 and doc["vertices"] == [[4.0, 4.0, 4.0]]
    code, _, err = run(capsys, "polytope", "--sigma", "8,7,6,5,4,3,2,1")
    assert code == 2 and "--hull-only" in err
    code, doc = run_json(capsys, "polytope", "--sigma", "8,7,6,5,4,3,2,1", "--hull-only")
    assert code == 0 and doc["partial_certificate"] and len(doc["basic_set"]) == 105


def test_verify(capsys):
    code, doc = run_json(capsys, "verify", "--sigma", "4,3,2,1", "--samples", "10000")
    assert code == 0 and doc["verified"] and doc["max_violation"] <= 1e-9
    assert doc["seed"] == 0 and doc["tol"] == 1e-9 and doc["samples"] == 10000
    code, _, _ = run(capsys, "verify", "--sigma", "8,7,6,5,4,3,2,1", "--samples", "100")
    assert code == 2
    code, doc = run_json(capsys, "verify", "--sigma", "8,7,6,5,4,3,2,1", "--samples", "500", "--hull-only")
    assert code == 0 and doc["partial_certificate"]


def test_verify_negative_finding_with_impossible_tolerance(capsys):
    # a negative tolerance can never be met, which exercises exit code 1
    code, doc = run_json(capsys, "verify", "--sigma", "4,3,2,1", "--samples", "10", "--tol", "-1")
    assert code == 1 and not doc["verified"]


def test_p2_outputs(capsys, tmp_path):
    out = tmp_path / "p2"
    code, doc = run_json(capsys, "p2", "--sigma", "4,3,2,1", "--out", str(out), "--format", "json,csv,svg")
    assert code == 0
    assert doc["critical_values"] == [21.0, 24.0, 25.0]
    assert doc["nu1_interval"] == pytest.approx([5.0, 7.0])
    assert len(doc["critical_points"]) == 6
    rows = (out / "p2.csv").read_text().splitlines()
    assert rows[0] == "phi,theta,f,nu_1,nu_2" and len(rows) == 1 + 30 * 60
    assert len(svg_groups(out / "p2.svg", "great-circle")) >= 3
    assert len(svg_groups(out / "p2.svg", "contour")) > 0
    assert len(svg_groups(out / "p2.svg", "critical-point")) == 6


def test_p2_flat_and_topology(capsys, tmp_path):
    code, doc = run_json(capsys, "p2", "--sigma", "1,1,1,1", "--out", str(tmp_path), "--format", "json,svg")
    assert code == 0 and doc["contour_levels"] == [] and doc["mid_level_components"] == 0
    assert svg_groups(tmp_path / "p2.svg", "contour") == []
    _, a = run_json(capsys, "p2", "--sigma", "3,2,1,0")
    _, b = run_json(capsys, "p2", "--sigma", "3,2,1,0.01")
    assert a["mid_level_components"] == b["mid_level_components"] >= 1
    code, _, _ = run(capsys, "p2", "--sigma", "3,2,1,0,0,0")
    assert code == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["freq", "--sigma", "6,5,4,3,2,1", "--random", "--samples", "5", "--seed", "4", "--format", "csv"],
        ["verify", "--sigma", "6,5,4,3,2,1", "--samples", "3000", "--seed", "2"],
        ["p2", "--sigma", "4,3,2,1", "--format", "csv"],
        ["polytope", "--sigma", "21,19,16,14,12,8", "--format", "svg"],
    ],
)
def test_outputs_are_byte_identical(capsys, argv):
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second and first


def test_verify_thread_count_does_not_change_report(capsys):
    base = ["verify", "--sigma", "6,5,4,3,2,1", "--samples", "20000", "--seed", "2"]
    _, one, _ = run(capsys, *base)
    _, four, _ = run(capsys, *base, "--workers", "4")
    assert one == four


def test_input_with_sigma_document(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"sigma": [1, 4, 2, 3]}))
    code, doc = run_json(capsys, "polytope", "--input", str(path))
    assert code == 0 and doc["sigma"] == [4.0, 3.0, 2.0, 1.0]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "angmom", "freq", "--sigma", "4,3,2,1", "--pairing", "1-2,3-4", "--format", "csv"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[1] == "0,7.0,3.0,0.0"
