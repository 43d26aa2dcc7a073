from __future__ import annotations

import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rprcusp.geometry import DegenerateConfigurationError, SliceCoords, config_from_slice, slice_to_joint
from rprcusp.kinematics import direct_kinematics
from rprcusp.singular_slice import (
    SingularCurveSet,
    column_roots,
    label_regions,
    legs_concurrent,
    normalized_slice_residual,
    singularity_residual_task,
    slice_svg,
    trace_slice_curves,
    vertex_singularity_checks,
    write_regions_csv,
    write_slice_csv,
)

TOL_VERTEX = 1e-10


@pytest.fixture(scope="module")
def traces(gstar, gseg):
    return {
        ("reference", 14.98): trace_slice_curves(gstar, 14.98, 1024),
        ("reference", 17.0): trace_slice_curves(gstar, 17.0, 1024),
        ("reference", 31.0): trace_slice_curves(gstar, 31.0, 1024),
        ("segment", 5.0): trace_slice_curves(gseg, 5.0, 1024),
    }


def _geom(name, gstar, gseg):
    return gstar if name == "reference" else gseg


@given(st.floats(-math.pi, math.pi), st.floats(0.5, 45.0))
def test_column_roots_match_dense_sign_scan(alpha, rho1):
    from rprcusp.geometry import reference_geometry

    g = reference_geometry()
    roots = column_roots(g, rho1, alpha)
    th = np.linspace(-math.pi, math.pi, 20001)
    vals = np.array([float(normalized_slice_residual(g, rho1, alpha, t)) for t in th])
    s = np.sign(vals)
    changes = int(np.count_nonzero(s[1:] * s[:-1] < 0))
    # tangencies are invisible to the scan, so the scan is a lower bound
    assert len(roots) >= changes
    assert len(roots) <= 4
    for t in roots:
        assert abs(float(normalized_slice_residual(g, rho1, alpha, t))) < 1e-10


def test_branch_counts(traces):
    # frozen from the tracer at 1024 columns, cross-checked against 4096
    assert len(traces[("reference", 14.98)].branches) == 1
    assert len(traces[("reference", 17.0)].branches) == 1
    assert len(traces[("reference", 31.0)].branches) == 2
    assert all(b.closed for c in traces.values() for b in c.branches)


def test_three_way_singularity_agreement_on_vertices(traces, gstar, gseg):
    for (name, rho1), curves in traces.items():
        g = _geom(name, gstar, gseg)
        for a, t, r2, r3 in curves.vertices():
            res, det, conc = vertex_singularity_checks(g, rho1, a, t)
            assert abs(res) < TOL_VERTEX and abs(det) < TOL_VERTEX and abs(conc) < TOL_VERTEX
            assert (r2, r3) == pytest.approx(tuple(float(x) for x in slice_to_joint(g, rho1, a, t)), abs=1e-12)


def test_vertices_agree_with_task_space_residual(traces, gstar):
    curves = traces[("reference", 17.0)]
    for a, t, _, _ in curves.vertices()[::7]:
        cfg = config_from_slice(gstar, SliceCoords(17.0, a, t))
        assert legs_concurrent(gstar, cfg)
        scale = max(cfg.L) ** 2 * gstar.length_scale ** 2
        assert abs(singularity_residual_task(gstar, *cfg.theta)) <= 1e-9 * scale


def test_vertices_are_double_dk_roots(traces, gstar, gseg):
    for (name, rho1), curves in traces.items():
        g = _geom(name, gstar, gseg)
        v = curves.vertices()
        for a, t, r2, r3 in v[np.linspace(0, len(v) - 1, 150).astype(int)]:
            sol = direct_kinematics(g, (rho1, r2, r3))
            assert sol.max_root_multiplicity >= 2, (name, rho1, a, t)


def test_resolution_does_not_change_topology(gstar):
    coarse = trace_slice_curves(gstar, 17.0, 64)
    fine = trace_slice_curves(gstar, 17.0, 2048)
    assert len(coarse.branches) == len(fine.branches)
    assert [b.closed for b in coarse.branches] == [b.closed for b in fine.branches]


def test_trace_is_deterministic(gstar):
    a = trace_slice_curves(gstar, 17.0, 256).vertices()
    b = trace_slice_curves(gstar, 17.0, 256).vertices()
    assert np.array_equal(a, b)


def test_slice_csv_format(tmp_path, traces):
    p = tmp_path / "s.csv"
    curves = traces[("reference", 17.0)]
    write_slice_csv(curves, p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["alpha_rad", "theta1_rad", "rho2", "rho3", "branch_id", "residual"]
    assert len(rows) == 1 + curves.vertex_count
    for row in rows[1:50]:
        for field in row[:4]:
            mantissa = field.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(mantissa) >= 12 or float(field) == float(f"{float(field):.12g}")
        assert int(row[4]) >= 0


def test_svg_is_well_formed(traces):
    text = slice_svg(traces[("reference", 17.0)])
    root = ET.fromstring(text)
    ns = "{http://www.w3.org/2000/svg}"
    assert root.tag == f"{ns}svg"
    assert root.attrib["width"] == root.attrib["height"]
    assert root.findall(f"{ns}path")
    labels = [t.text for t in root.findall(f"{ns}text")]
    assert "ρ2" in labels and "ρ3" in labels


def test_regions_at_17_show_two_four_six(gstar, traces):
    reg = label_regions(gstar, 17.0, 40, curves=traces[("reference", 17.0)])
    assert {2, 4, 6} <= reg.observed_counts()


def test_regions_at_31_have_no_six(gstar, traces):
    reg = label_regions(gstar, 31.0, 40, curves=traces[("reference", 31.0)])
    assert 6 not in set(np.unique(reg.counts))


def test_regions_far_away_are_void(gstar, tmp_path):
    reg = label_regions(gstar, 17.0, 5, bounds=(500.0, 600.0, 500.0, 600.0), curves=SingularCurveSet(17.0, (), 8))
    assert not reg.counts.any()
    p = tmp_path / "r.csv"
    write_regions_csv(reg, p)
    rows = list(csv.reader(p.open()))
    assert rows[0] == ["rho2", "rho3", "count"] and len(rows) == 26
    assert all(r[2] == "0" for r in rows[1:])


def test_region_counts_are_even_off_the_curves(gstar, traces):
    reg = label_regions(gstar, 17.0, 30, curves=traces[("reference", 17.0)])
    inner = reg.counts[~reg.boundary]
    assert set(np.unique(inner)) <= {0, 2, 4, 6}


def test_bad_inputs(gstar):
    with pytest.raises(ValueError):
        label_regions(gstar, 17.0, 0)
    with pytest.raises(ValueError):
        label_regions(gstar, 17.0, 4, bounds=(5.0, 1.0, 0.0, 1.0))
    with pytest.raises(ValueError):
        trace_slice_curves(gstar, 0.0, 64)
