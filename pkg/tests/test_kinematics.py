from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
import sympy as sp

from oracles import REFERENCE, SEGMENT, brute_force_dk
from rprcusp.geometry import DegenerateConfigurationError, PlatformPose, inverse_kinematics, wrap_angle
from rprcusp.kinematics import (
    Cluster,
    DKPose,
    cluster_solutions,
    count_assembly_modes,
    degree8_form,
    direct_kinematics,
    pose_distance,
    sextic_coefficients,
)

# Orientations of every assembly mode from the independent multi-start solver.
FROZEN_DK = {
    "reference": [
        ((14.98, 20, 20), [-2.225940600895, -0.305132158772, 0.41244344752, 0.782059079416, 1.170678292682, 3.097511552118]),
        ((17, 15, 25), [-2.375804911884, -0.112498660989]),
        ((31, 20, 20), [-1.417124017195, 1.113645755592]),
    ],
    "segment": [
        ((2, 2.5, 2), [-2.922196042101, 2.562722374107]),
        ((3, 2.5, 3.2), []),
        ((1.5, 2.4, 1.6), [-0.095792809214, 1.286426154066]),
    ],
}


def test_degree8_form_divisible_by_one_plus_t_squared():
    A2x, A3x, A3y, d1, d3, cb, sb, r1, r2, r3, t = sp.symbols("A2x A3x A3y d1 d3 cb sb r1 r2 r3 t")
    s8 = degree8_form((A2x, A3x, A3y, d1, d3, cb, sb), (r1, r2, r3))
    P = sp.expand(sum(c * t**k for k, c in enumerate(s8)))
    _, rem = sp.div(P, t**2 + 1, t)
    # reduce with cos^2 + sin^2 = 1 of the platform angle
    for c in sp.Poly(rem, t).all_coeffs():
        assert sp.rem(sp.expand(c), sb**2 + cb**2 - 1, sb) == 0


@pytest.mark.parametrize("mode", ["float", "mp"])
def test_numeric_division_remainder_is_rounding_level(gstar, mode):
    q, rem = sextic_coefficients(gstar, (14.98, 20.0, 20.0), mode=mode, digits=50)
    cmax = max(abs(c) for c in q)
    tol = 1e-12 if mode == "float" else mpmath.mpf(10) ** -40
    assert max(abs(rem[0]), abs(rem[1])) <= tol * cmax


@pytest.mark.parametrize("name,geom_fixture", [("reference", "gstar"), ("segment", "gseg")])
def test_dk_matches_frozen_oracle(name, geom_fixture, request):
    geom = request.getfixturevalue(geom_fixture)
    for L, alphas in FROZEN_DK[name]:
        sol = direct_kinematics(geom, L)
        assert sorted(p.alpha for p in sol.poses) == pytest.approx(alphas, abs=1e-9)


@pytest.mark.parametrize("name,geom_fixture", [("reference", "gstar"), ("segment", "gseg")])
def test_dk_matches_live_oracle_on_random_lengths(name, geom_fixture, request):
    geom = request.getfixturevalue(geom_fixture)
    g = REFERENCE if name == "reference" else SEGMENT
    rng = np.random.default_rng(7)
    top = 45.0 if name == "reference" else 6.0
    for _ in range(60):
        L = tuple(rng.uniform(0.2, 1.0, 3) * top)
        ref = brute_force_dk(g, L)
        got = sorted(p.alpha for p in direct_kinematics(geom, L).poses)
        assert len(got) == len(ref)
        assert got == pytest.approx(ref, abs=1e-7)


def test_every_pose_closes(gstar):
    sol = direct_kinematics(gstar, (14.98, 20, 20))
    for cfg in sol.configurations(gstar):
        assert cfg.is_consistent(gstar)
        assert cfg.L == pytest.approx((14.98, 20, 20), abs=1e-8)


@pytest.mark.parametrize("geom_fixture", ["gstar", "gseg"])
def test_ik_dk_round_trip_1000_poses(geom_fixture, request):
    geom = request.getfixturevalue(geom_fixture)
    rng = np.random.default_rng(11)
    s = geom.length_scale
    done = 0
    while done < 1000:
        x, y = rng.uniform(-1.5 * s, 1.5 * s, 2)
        a = rng.uniform(-math.pi, math.pi)
        try:
            cfg = inverse_kinematics(geom, PlatformPose((x, y), a))
        except DegenerateConfigurationError:
            continue
        sol = direct_kinematics(geom, cfg.L)
        best = min(
            max(math.hypot(p.pose.b1[0] - x, p.pose.b1[1] - y), geom.d1 * abs(wrap_angle(p.alpha - a)))
            for p in sol.poses
        )
        assert best <= 1e-6 * s
        done += 1


@pytest.mark.parametrize("geom_fixture", ["gstar", "gseg"])
def test_at_most_six_assembly_modes(geom_fixture, request):
    geom = request.getfixturevalue(geom_fixture)
    rng = np.random.default_rng(13)
    top = 3.0 * geom.length_scale
    counts = [count_assembly_modes(geom, tuple(rng.uniform(0.0, top, 3))) for _ in range(10_000)]
    assert max(counts) <= 6
    assert min(counts) >= 0


def test_mp_and_float_agree(gstar):
    L = (14.98, 20, 20)
    a = sorted(p.alpha for p in direct_kinematics(gstar, L).poses)
    b = sorted(p.alpha for p in direct_kinematics(gstar, L, mode="mp", digits=40).poses)
    assert a == pytest.approx(b, abs=1e-12)


def test_unreachable_and_zero_lengths(gstar):
    assert direct_kinematics(gstar, (1000.0, 1.0, 1.0)).count == 0
    assert direct_kinematics(gstar, (0.0, 10.0, 10.0)).count == 0
    with pytest.raises(ValueError):
        direct_kinematics(gstar, (-1.0, 10.0, 10.0))


def test_clustering_is_transitive():
    from rprcusp.geometry import reference_geometry

    g = reference_geometry()
    mk = lambda a: DKPose(PlatformPose((1.0, 0.0), a), 0.0, 0.0)
    poses = [mk(0.0), mk(0.6e-4), mk(1.2e-4), mk(1.0)]
    eps = 1.1e-3
    clusters = cluster_solutions(g, poses, eps)
    assert [c.members for c in clusters] == [(0, 1, 2), (3,)]
    assert clusters[0].gap == pytest.approx(pose_distance(g, poses[0], poses[2]))
    with pytest.raises(ValueError):
        cluster_solutions(g, poses, 0.0)
    assert Cluster((0, 1), 0.0, near_real=1).root_multiplicity == 3


def test_double_root_split_by_rounding_is_still_reported(gstar):
    # a traced singular vertex whose rounded lengths leave no real pose there
    g = gstar
    sol = direct_kinematics(g, (14.98, 47.1083556764885, 42.0860641288185))
    assert sol.count == 0
    (c,) = sol.clusters
    assert c.members == () and c.root_multiplicity == 2 and c.gap < 1e-5
    # a generic point keeps only singleton clusters
    assert all(c.root_multiplicity == 1 for c in direct_kinematics(g, (14.98, 20.0, 20.0)).clusters)
