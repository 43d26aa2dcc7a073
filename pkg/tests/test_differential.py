from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rprcusp.differential import (
    KernelPair,
    RankDeficientError,
    adjoint_k_factors,
    cusp_condition,
    first_row_cusp_value,
    hessians_theta,
    jacobian_rho,
    jacobian_theta,
    kernel_residuals,
    kernel_vectors,
    normalized_det,
)
from rprcusp.geometry import (
    Configuration,
    DegenerateConfigurationError,
    PlatformPose,
    SliceCoords,
    config_from_slice,
    constraint_residuals,
    inverse_kinematics,
    reference_geometry,
    second_geometry,
)
from rprcusp.singular_slice import trace_slice_curves


def random_configs(geom, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    s = geom.length_scale
    while len(out) < n:
        x, y = rng.uniform(-1.5 * s, 1.5 * s, 2)
        try:
            out.append(inverse_kinematics(geom, PlatformPose((x, y), rng.uniform(-math.pi, math.pi))))
        except DegenerateConfigurationError:
            pass
    return out


def gamma(geom, L, theta):
    return np.array(constraint_residuals(geom, Configuration(tuple(L), tuple(theta))))


@pytest.mark.parametrize("geom", [reference_geometry(), second_geometry()], ids=["reference", "segment"])
def test_jacobian_theta_matches_finite_differences(geom):
    worst = 0.0
    for cfg in random_configs(geom, 100, 1):
        J = jacobian_theta(geom, cfg)
        h = 1e-6
        fd = np.empty((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            th = np.array(cfg.theta)
            fd[:, k] = (gamma(geom, cfg.L, th + e) - gamma(geom, cfg.L, th - e)) / (2 * h)
        worst = max(worst, np.abs(J - fd).max() / np.abs(J).max())
    assert worst <= 1e-6


def test_jacobian_rho_matches_finite_differences(gstar):
    for cfg in random_configs(gstar, 100, 2):
        J = jacobian_rho(gstar, cfg)
        h = 1e-6
        fd = np.empty((3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            L = np.array(cfg.L)
            fd[:, k] = (gamma(gstar, L + e, cfg.theta) - gamma(gstar, L - e, cfg.theta)) / (2 * h)
        assert np.abs(J - fd).max() <= 1e-6 * np.abs(J).max()


@pytest.mark.parametrize("geom", [reference_geometry(), second_geometry()], ids=["reference", "segment"])
def test_hessians_match_finite_differences(geom):
    for cfg in random_configs(geom, 100, 3):
        H = hessians_theta(geom, cfg)
        h = 1e-5
        fd = np.empty((3, 3, 3))
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            th = np.array(cfg.theta)
            jp = jacobian_theta(geom, Configuration(cfg.L, tuple(th + e)))
            jm = jacobian_theta(geom, Configuration(cfg.L, tuple(th - e)))
            fd[:, :, k] = (jp - jm) / (2 * h)
        for i, Hi in enumerate(H):
            scale = max(np.abs(np.stack(list(H))).max(), 1e-300)
            assert np.abs(Hi - fd[i]).max() <= 1e-5 * scale


@pytest.mark.parametrize("geom", [reference_geometry(), second_geometry()], ids=["reference", "segment"])
def test_adjugate_identity(geom):
    for cfg in random_configs(geom, 100, 4):
        J = jacobian_theta(geom, cfg)
        _, adj = adjoint_k_factors(geom, cfg)
        det = np.linalg.det(J)
        s = np.abs(J).max() ** 3
        assert np.abs(J @ adj - det * np.eye(3)).max() <= 1e-9 * s
        assert np.abs(adj @ J - det * np.eye(3)).max() <= 1e-9 * s


def singular_configs(geom, rho1, n):
    curves = trace_slice_curves(geom, rho1, 256)
    v = curves.vertices()
    idx = np.linspace(0, len(v) - 1, n).astype(int)
    out = []
    for a, t, _, _ in v[idx]:
        try:
            out.append(config_from_slice(geom, SliceCoords(rho1, a, t)))
        except DegenerateConfigurationError:
            pass
    return out


def test_kernel_vectors_annihilate_singular_jacobian(gstar):
    for cfg in singular_configs(gstar, 17.0, 40):
        assert abs(normalized_det(gstar, cfg)) < 1e-9
        pair = kernel_vectors(gstar, cfg)
        ru, rv = kernel_residuals(gstar, cfg, pair)
        assert ru < 1e-7 and rv < 1e-7
        assert np.linalg.norm(pair.u) == pytest.approx(1.0)


def test_cusp_condition_invariant_under_kernel_scaling(gstar):
    for cfg in singular_configs(gstar, 14.98, 20):
        pair = kernel_vectors(gstar, cfg)
        base = cusp_condition(gstar, cfg, pair)
        for su, sv in ((2.0, 1.0), (-1.0, 3.0), (0.5, -0.25)):
            other = KernelPair(pair.k, su * pair.u, sv * pair.v, pair.row_index, pair.col_index)
            assert cusp_condition(gstar, cfg, other) == pytest.approx(base, rel=1e-9, abs=1e-15)


def test_first_row_form_proportional_to_normalized_condition(gstar):
    for cfg in singular_configs(gstar, 14.98, 20):
        pair = kernel_vectors(gstar, cfg, row_index=0, col_index=0)
        k1, k2, k3, k4, k5, k6 = pair.k
        u = np.array([k1 * k2, -k2 * k5, k3 * k5])
        v = np.array([k1 * k2, k3 * k4, -k1 * k4])
        hmax = max(float(np.abs(H).sum(axis=1).max()) for H in hessians_theta(gstar, cfg))
        ratio = first_row_cusp_value(gstar, cfg) / (np.linalg.norm(u) * np.linalg.norm(v) ** 2 * hmax)
        assert abs(ratio) == pytest.approx(abs(cusp_condition(gstar, cfg, pair)), rel=1e-6, abs=1e-12)


def test_rank_deficient_adjugate_raises():
    g = reference_geometry()
    cfg = random_configs(g, 1, 5)[0]
    # a zero jacobian arises when every leg length vanishes
    zero = Configuration((0.0, 0.0, 0.0), cfg.theta)
    with pytest.raises(RankDeficientError):
        kernel_vectors(g, zero)
    pair = kernel_vectors(g, zero, fallback=True)
    assert pair.degenerate


@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_normalized_det_is_scale_free(seed, k):
    g = reference_geometry()
    cfg = random_configs(g, 1, seed)[0]
    scaled = Configuration(tuple(k * x for x in cfg.L), cfg.theta)
    assert normalized_det(g.scaled(k), scaled) == pytest.approx(normalized_det(g, cfg), rel=1e-8, abs=1e-12)
