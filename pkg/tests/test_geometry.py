from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import REFERENCE, ik
from rprcusp.geometry import (
    GEOMETRY_KEYS,
    DegenerateConfigurationError,
    GeometryError,
    ManipulatorGeometry,
    PlatformPose,
    SliceCoords,
    config_from_slice,
    constraint_residuals,
    derive_platform_angle,
    exact_decimal,
    inverse_kinematics,
    pose_from_config,
    reference_geometry,
    second_geometry,
    slice_from_config,
    wrap_angle,
)

angles = st.floats(-math.pi, math.pi, allow_nan=False)


def test_json_round_trip_has_exactly_six_keys(tmp_path, gstar):
    p = tmp_path / "g.json"
    gstar.to_json(p)
    data = json.loads(p.read_text())
    assert tuple(sorted(data)) == tuple(sorted(GEOMETRY_KEYS))
    assert ManipulatorGeometry.from_json(p) == gstar


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("d3"),
        lambda d: d.update(beta=0.5),
        lambda d: d.update(d1="17"),
        lambda d: d.update(d2=True),
    ],
)
def test_malformed_geometry_rejected(mutate):
    d = reference_geometry().to_dict()
    mutate(d)
    with pytest.raises(GeometryError):
        ManipulatorGeometry.from_dict(d)


def test_invalid_json_rejected(tmp_path):
    p = tmp_path / "g.json"
    p.write_text("{not json")
    with pytest.raises(GeometryError):
        ManipulatorGeometry.from_json(p)


@pytest.mark.parametrize(
    "kw",
    [
        dict(A2x=0.0),
        dict(A2x=-1.0),
        dict(d1=0.0),
        dict(d1=100.0),
        dict(d2=float("nan")),
    ],
)
def test_bad_parameters_rejected(kw):
    d = reference_geometry().to_dict()
    d.update(kw)
    with pytest.raises(GeometryError):
        ManipulatorGeometry(**d)


def test_flat_platform_needs_opt_in():
    d = second_geometry().to_dict()
    with pytest.raises(GeometryError):
        ManipulatorGeometry(**d)
    g = ManipulatorGeometry(**d, allow_flat=True)
    assert g.is_flat and g.beta == 0.0 and g.h == 0.0
    assert g.exact_h_squared == 0


def test_platform_angle_of_reference():
    beta, h = derive_platform_angle(17.04, 16.54, 20.84)
    c = (17.04**2 + 20.84**2 - 16.54**2) / (2 * 17.04 * 20.84)
    assert beta == pytest.approx(math.acos(c), abs=1e-14)
    assert h == pytest.approx(20.84 * math.sin(beta), abs=1e-12)
    g = reference_geometry()
    assert float(g.exact_h_squared) == pytest.approx(h * h, rel=1e-14)


def test_exact_decimal_reads_text():
    assert exact_decimal(14.98).numerator == 749
    assert exact_decimal(14.98).denominator == 50
    assert exact_decimal("0.1") == exact_decimal(0.1)


def test_ik_matches_direct_vertex_placement(gstar):
    pose = PlatformPose((5.0, 3.0), math.radians(30.0))
    cfg = inverse_kinematics(gstar, pose)
    assert cfg.L == pytest.approx(ik(REFERENCE, 5.0, 3.0, math.radians(30.0)), abs=1e-12)
    # frozen: independent vertex placement
    assert cfg.L == pytest.approx((5.830951894845301, 12.145384709747864, 15.957304956937834), abs=1e-12)


def test_ik_degenerate_leg():
    g = reference_geometry()
    with pytest.raises(DegenerateConfigurationError):
        inverse_kinematics(g, PlatformPose((0.0, 0.0), 0.3))


@given(x=st.floats(-30, 30), y=st.floats(-30, 30), a=angles)
def test_ik_configuration_closes(x, y, a):
    g = reference_geometry()
    try:
        cfg = inverse_kinematics(g, PlatformPose((x, y), a))
    except DegenerateConfigurationError:
        return
    assert max(abs(r) for r in constraint_residuals(g, cfg)) <= g.tol_constraint
    back = pose_from_config(g, cfg)
    assert back.b1 == pytest.approx((x, y), abs=1e-9)
    assert abs(wrap_angle(back.alpha - a)) < 1e-9


@given(r1=st.floats(0.5, 40), a=angles, t=angles)
def test_slice_coordinates_round_trip(r1, a, t):
    g = reference_geometry()
    try:
        cfg = config_from_slice(g, SliceCoords(r1, a, t))
    except DegenerateConfigurationError:
        return
    assert cfg.is_consistent(g)
    sl = slice_from_config(g, cfg)
    assert sl.rho1 == pytest.approx(r1)
    assert abs(wrap_angle(sl.alpha - a)) < 1e-9
    assert abs(wrap_angle(sl.theta1 - t)) < 1e-9


def test_scaled_geometry_scales_lengths(gstar):
    g2 = gstar.scaled(2.0)
    assert np.allclose([g2.d1, g2.A2x], [2 * gstar.d1, 2 * gstar.A2x])
    assert g2.beta == pytest.approx(gstar.beta)
