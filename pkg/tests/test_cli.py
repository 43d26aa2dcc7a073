from __future__ import annotations

import csv
import io
import json
import math

import pytest

from rprcusp import cli
from rprcusp.polyalg import DegreeCapError

CUSP_A = ("14.98", "0.8452820182803571", "3.7779158004789877")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def flat_json(tmp_path_factory):
    p = tmp_path_factory.mktemp("geom") / "second.json"
    assert run("geometry", "--preset", "second", "--out", p)[0] == 0
    return p


def test_geometry_presets_have_six_keys():
    code, out, _ = run("geometry")
    doc = json.loads(out)
    assert code == 0 and set(doc) == {"A2x", "A3x", "A3y", "d1", "d2", "d3"}
    assert doc["A2x"] == 15.91 and doc["d3"] == 20.84


def test_flat_geometry_needs_opt_in(flat_json):
    assert run("--geometry", flat_json, "ik", "--pose", 1, 1, 0)[0] == 2
    assert run("--geometry", flat_json, "--allow-flat", "ik", "--pose", 1, 1, 0)[0] == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["slice", "--rho1", "0", "--out", "x.csv"],
        ["slice", "--rho1", "nan", "--out", "x.csv"],
        ["cusps", "--rho1", "-1"],
        ["cusps", "--rho1", "5", "--mode", "guess"],
        ["dk", "--lengths", "1", "2"],
        ["dk", "--lengths", "1", "2", "x"],
        ["ik", "--pose", "1", "2", "inf"],
        ["--geometry", "/nonexistent/g.json", "ik", "--pose", "1", "2", "3"],
        ["--digits", "0", "ik", "--pose", "1", "2", "3"],
        ["--digits", "10", "cusps", "--rho1", "5"],
        ["surface", "--rho1-range", "1", "2", "--steps", "2", "--format", "stl", "--out", "m.stl"],
        ["frobnicate"],
        [],
    ],
)
def test_invalid_input_exits_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, out, err = run(*argv)
    assert code == 2 and err


def test_malformed_geometry_file_exits_2(tmp_path):
    p = tmp_path / "g.json"
    p.write_text('{"A2x": 1}')
    assert run("--geometry", p, "ik", "--pose", 1, 1, 0)[0] == 2


def test_numeric_failure_exits_3(monkeypatch):
    def boom(args, out):
        raise DegreeCapError("resultant degree above cap")

    monkeypatch.setitem(cli.COMMANDS, "cusps", boom)
    code, _, err = run("cusps", "--rho1", 5)
    assert code == 3 and "numeric failure" in err


def test_slice_outputs(tmp_path):
    csv_p, svg_p = tmp_path / "s.csv", tmp_path / "s.svg"
    code, out, _ = run("slice", "--rho1", 17, "--resolution", 128, "--out", csv_p, "--svg", svg_p)
    assert code == 0 and out.startswith("branches 1 ")
    rows = list(csv.reader(csv_p.open()))
    assert rows[0] == ["alpha_rad", "theta1_rad", "rho2", "rho3", "branch_id", "residual"]
    assert len(rows) > 100
    svg = svg_p.read_text()
    assert svg.startswith("<svg") and "&#961;2</text>" in svg and "&#961;3</text>" in svg


def test_slice_topology_independent_of_resolution(tmp_path):
    a = run("slice", "--rho1", 17, "--resolution", 64, "--out", tmp_path / "a.csv")[1]
    b = run("slice", "--rho1", 17, "--resolution", 2048, "--out", tmp_path / "b.csv")[1]
    assert a.split()[:2] == b.split()[:2] == ["branches", "1"]


def test_cusps_table_row_count(tmp_path):
    p = tmp_path / "c.json"
    code, out, _ = run("cusps", "--rho1", 14.98, "--out", p)
    assert code == 0 and out == "6\n"
    doc = json.loads(p.read_text())
    a = [c for c in doc["cusps"] if abs(c["alpha_deg"] - 50.67) < 0.1]
    assert len(a) == 1 and abs(a[0]["rho2"] - 0.84) < 0.02 and abs(a[0]["rho3"] - 3.77) < 0.02


def test_cusps_empty_slice(tmp_path):
    p = tmp_path / "c.json"
    code, out, _ = run("cusps", "--rho1", 0.05, "--out", p)
    assert code == 0 and out == "0\n" and json.loads(p.read_text())["cusps"] == []


def test_cusps_numeric_and_algebraic_agree(tmp_path):
    docs = {}
    for mode in ("algebraic", "numeric"):
        p = tmp_path / f"{mode}.json"
        assert run("cusps", "--rho1", 17, "--mode", mode, "--out", p)[0] == 0
        docs[mode] = json.loads(p.read_text())["cusps"]
    assert len(docs["algebraic"]) == len(docs["numeric"]) == 6
    for a, n in zip(docs["algebraic"], docs["numeric"]):
        for k in ("alpha_deg", "theta1_deg"):
            assert abs(math.radians(a[k] - n[k])) <= 1e-4
        for k in ("rho2", "rho3"):
            assert abs(a[k] - n[k]) <= 1e-4
        assert n["source"] == "numeric"


def test_dk_reports_triple_root_at_cusp():
    code, out, _ = run("dk", "--lengths", *CUSP_A)
    doc = json.loads(out)
    assert code == 0 and max(c["root_multiplicity"] for c in doc["clusters"]) == 3
    code, out, _ = run("dk", "--mode", "mp", "--lengths", *CUSP_A)
    assert max(c["root_multiplicity"] for c in json.loads(out)["clusters"]) >= 3


def test_dk_unreachable_is_empty():
    code, out, _ = run("dk", "--lengths", 1, 1, 1)
    doc = json.loads(out)
    assert code == 0 and doc["poses"] == [] and doc["clusters"] == []


def test_ik_dk_round_trip():
    code, out, _ = run("ik", "--pose", 3.0, 4.0, 25.0)
    L = json.loads(out)["L"]
    code, out, _ = run("dk", "--lengths", *[repr(x) for x in L])
    poses = json.loads(out)["poses"]
    assert code == 0
    assert any(
        abs(p["x"] - 3.0) < 1e-8 and abs(p["y"] - 4.0) < 1e-8 and abs(p["alpha_deg"] - 25.0) < 1e-7 for p in poses
    )


def _region_counts(path):
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["rho2", "rho3", "count"]
    return {int(r[2]) for r in rows[1:]}


def test_regions(tmp_path):
    p17, p31, void = tmp_path / "17.csv", tmp_path / "31.csv", tmp_path / "v.csv"
    assert run("regions", "--rho1", 17, "--grid", 40, "--out", p17)[0] == 0
    assert {2, 4, 6} <= _region_counts(p17)
    assert run("regions", "--rho1", 31, "--grid", 40, "--out", p31)[0] == 0
    assert 6 not in _region_counts(p31)
    code, out, _ = run("regions", "--rho1", 17, "--grid", 5, "--bounds", 500, 600, 500, 600, "--out", void)
    assert code == 0 and _region_counts(void) == {0} and out == "counts 0\n"


def test_single_step_surface(tmp_path, flat_json):
    mesh = tmp_path / "m.obj"
    code, out, _ = run(
        "--geometry", flat_json, "--allow-flat", "surface",
        "--rho1-range", 5, 5, "--steps", 1, "--resolution", 64, "--out", mesh,
    )
    assert code == 0 and "faces 0" in out
    text = mesh.read_text()
    assert "\nv " in text and "\nl " in text and "\nf " not in text
    rows = (tmp_path / "m.csv").read_text().splitlines()
    assert rows[0] == "rho1,cusp_count,branch_count,vertex_count" and rows[1].startswith("5,4,")


def test_outputs_are_byte_identical(tmp_path, flat_json):
    def once(tag):
        d = tmp_path / tag
        d.mkdir()
        run("--geometry", flat_json, "--allow-flat", "slice", "--rho1", 5, "--resolution", 64,
            "--out", d / "s.csv", "--svg", d / "s.svg", "--mark-cusps")
        run("--geometry", flat_json, "--allow-flat", "cusps", "--rho1", 5, "--out", d / "c.json")
        run("--geometry", flat_json, "--allow-flat", "surface", "--rho1-range", 4, 6, "--steps", 2,
            "--resolution", 64, "--out", d / "m.obj")
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    a, b = once("a"), once("b")
    assert set(a) == {"s.csv", "s.svg", "c.json", "m.obj", "m.csv"}
    assert a == b


def test_digits_flag_reaches_cusp_detection(tmp_path):
    code, out, _ = run("--digits", 50, "cusps", "--rho1", 14.98)
    assert code == 0 and out == "6\n"
