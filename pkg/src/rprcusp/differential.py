"""First and second order derivatives of the closure constraints.

All matrices are for ``Gamma = (Gamma1, Gamma2, Gamma3)`` differentiated with
respect to the leg angles ``theta`` (or the lengths ``L`` for
:func:`jacobian_rho`).  On the singular set the adjugate of ``dGamma/dtheta``
has rank one: its rows span the left kernel and its columns the right kernel,
which is all that the triple-coalescence test needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .geometry import Configuration, ManipulatorGeometry

TOL_KERNEL = 1e-7
TOL_CUSP = 1e-6
TOL_SING = 1e-8


class RankDeficientError(ArithmeticError):
    """The adjugate vanishes: dGamma/dtheta has rank <= 1 (non-simple singularity)."""


@dataclass(frozen=True)
class ConstraintJacobian:
    J_theta: np.ndarray
    J_rho: np.ndarray


@dataclass(frozen=True)
class KernelPair:
    k: Tuple[float, ...]
    u: np.ndarray
    v: np.ndarray
    row_index: int
    col_index: int
    degenerate: bool = False


@dataclass(frozen=True)
class HessianTriple:
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray

    def __iter__(self):
        return iter((self.H1, self.H2, self.H3))


def _trig(config: Configuration):
    t1, t2, t3 = config.theta
    return (math.sin(t1), math.sin(t2), math.sin(t3)), (math.cos(t1), math.cos(t2), math.cos(t3))


def k_factors(geom: ManipulatorGeometry, config: Configuration) -> Tuple[float, ...]:
    """The six nonzero entries of dGamma/dtheta, in the order the adjugate formulas use."""
    r1, r2, r3 = config.L
    t1, t2, t3 = config.theta
    (s1, s2, s3), (c1, c2, c3) = _trig(config)
    A2x, A3x, A3y = geom.A2x, geom.A3x, geom.A3y
    s12, s13, s23 = math.sin(t1 - t2), math.sin(t1 - t3), math.sin(t2 - t3)
    k1 = 2 * r2 * ((A3x - A2x) * s2 + r3 * s23 - A3y * c2)
    k2 = -2 * r3 * (r1 * s13 + A3x * s3 - A3y * c3)
    k3 = -2 * r3 * ((A3x - A2x) * s3 + r2 * s23 - A3y * c3)
    k4 = 2 * r1 * (r3 * s13 + A3x * s1 - A3y * c1)
    k5 = -2 * r2 * (r1 * s12 + A2x * s2)
    k6 = 2 * r1 * (r2 * s12 + A2x * s1)
    return k1, k2, k3, k4, k5, k6


def jacobian_theta(geom: ManipulatorGeometry, config: Configuration) -> np.ndarray:
    k1, k2, k3, k4, k5, k6 = k_factors(geom, config)
    return np.array([[k6, k5, 0.0], [0.0, k1, k3], [k4, 0.0, k2]])


def jacobian_rho(geom: ManipulatorGeometry, config: Configuration) -> np.ndarray:
    r1, r2, r3 = config.L
    (s1, s2, s3), (c1, c2, c3) = _trig(config)
    e = np.array([[c1, s1], [c2, s2], [c3, s3]])
    b1 = r1 * e[0]
    b2 = np.array([geom.A2x, 0.0]) + r2 * e[1]
    b3 = np.array([geom.A3x, geom.A3y]) + r3 * e[2]
    e12, e23, e31 = b2 - b1, b3 - b2, b1 - b3
    return 2.0 * np.array(
        [
            [-e12 @ e[0], e12 @ e[1], 0.0],
            [0.0, -e23 @ e[1], e23 @ e[2]],
            [e31 @ e[0], 0.0, -e31 @ e[2]],
        ]
    )


def constraint_jacobian(geom: ManipulatorGeometry, config: Configuration) -> ConstraintJacobian:
    return ConstraintJacobian(jacobian_theta(geom, config), jacobian_rho(geom, config))


def hessians_theta(geom: ManipulatorGeometry, config: Configuration) -> HessianTriple:
    r1, r2, r3 = config.L
    t1, t2, t3 = config.theta
    (s1, s2, s3), (c1, c2, c3) = _trig(config)
    A2x, A3x, A3y = geom.A2x, geom.A3x, geom.A3y
    c21, c23, c31 = math.cos(t2 - t1), math.cos(t2 - t3), math.cos(t3 - t1)
    H1 = 2.0 * np.array(
        [
            [r1 * (A2x * c1 + r2 * c21), -r1 * r2 * c21, 0.0],
            [-r1 * r2 * c21, -r2 * (A2x * c2 - r1 * c21), 0.0],
            [0.0, 0.0, 0.0],
        ]
    )
    H2 = 2.0 * np.array(
        [
            [0.0, 0.0, 0.0],
            [0.0, -r2 * ((A2x - A3x) * c2 - r3 * c23 - A3y * s2), -r2 * r3 * c23],
            [0.0, -r2 * r3 * c23, r3 * ((A2x - A3x) * c3 + r2 * c23 - A3y * s3)],
        ]
    )
    H3 = 2.0 * np.array(
        [
            [r1 * (A3x * c1 + r3 * c31 + A3y * s1), 0.0, -r1 * r3 * c31],
            [0.0, 0.0, 0.0],
            [-r1 * r3 * c31, 0.0, r3 * (r1 * c31 - A3x * c3 - A3y * s3)],
        ]
    )
    return HessianTriple(H1, H2, H3)


def adjoint_k_factors(geom: ManipulatorGeometry, config: Configuration):
    """k-factors and the adjugate of dGamma/dtheta assembled from them.

    Entry (2, 3) is ``-k3 k6``; the cofactor expansion of the Jacobian fixes
    that sign.
    """
    k = k_factors(geom, config)
    k1, k2, k3, k4, k5, k6 = k
    adj = np.array(
        [
            [k1 * k2, -k2 * k5, k3 * k5],
            [k3 * k4, k2 * k6, -k3 * k6],
            [-k1 * k4, k4 * k5, k1 * k6],
        ]
    )
    return k, adj


def det_normalizer(geom: ManipulatorGeometry, config: Configuration) -> float:
    r1, r2, r3 = config.L
    return 8.0 * abs(r1 * r2 * r3) * geom.d1 * geom.d2 * geom.d3


def normalized_det(geom: ManipulatorGeometry, config: Configuration) -> float:
    """det(dGamma/dtheta), made dimensionless and free of the trivial rho factors."""
    return float(np.linalg.det(jacobian_theta(geom, config))) / det_normalizer(geom, config)


def _orient(w: np.ndarray) -> np.ndarray:
    # Largest-magnitude component positive; makes the pair sign-canonical.
    i = int(np.argmax(np.abs(w)))
    return -w if w[i] < 0 else w


def kernel_vectors(
    geom: ManipulatorGeometry,
    config: Configuration,
    tol: float = TOL_KERNEL,
    fallback: bool = False,
    row_index: int | None = None,
    col_index: int | None = None,
) -> KernelPair:
    """Unit left/right kernel vectors of dGamma/dtheta taken from its adjugate.

    The adjugate row and column of largest norm are used unless indices are
    forced.  If the whole adjugate is negligible the Jacobian has rank <= 1;
    then :class:`RankDeficientError` is raised, or with ``fallback=True`` the
    smallest singular directions are returned with ``degenerate`` set.
    """
    k, adj = adjoint_k_factors(geom, config)
    J = jacobian_theta(geom, config)
    scale = max(float(np.abs(J).max()), 1e-300) ** 2
    rows = np.linalg.norm(adj, axis=1)
    cols = np.linalg.norm(adj, axis=0)
    i = int(np.argmax(rows)) if row_index is None else row_index
    j = int(np.argmax(cols)) if col_index is None else col_index
    if rows[i] <= tol * scale or cols[j] <= tol * scale:
        if not fallback:
            raise RankDeficientError("adjugate of dGamma/dtheta vanishes (rank <= 1)")
        U, _, Vt = np.linalg.svd(J)
        return KernelPair(k, _orient(U[:, 2]), _orient(Vt[2]), -1, -1, degenerate=True)
    u = adj[i] / rows[i]
    v = adj[:, j] / cols[j]
    if row_index is None and col_index is None:
        u, v = _orient(u), _orient(v)
    return KernelPair(k, u, v, i, j)


def kernel_residuals(geom: ManipulatorGeometry, config: Configuration, pair: KernelPair) -> Tuple[float, float]:
    J = jacobian_theta(geom, config)
    s = float(np.abs(J).max())
    return float(np.abs(pair.u @ J).max() / s), float(np.abs(J @ pair.v).max() / s)


def second_order_form(hess: HessianTriple, u: np.ndarray, v: np.ndarray) -> float:
    M = u[0] * hess.H1 + u[1] * hess.H2 + u[2] * hess.H3
    return float(v @ M @ v)


def cusp_condition(
    geom: ManipulatorGeometry,
    config: Configuration,
    pair: KernelPair | None = None,
) -> float:
    """Triple-coalescence value v^T (sum u_i H_i) v, normalized.

    Division by ``|u| |v|^2 max_i ||H_i||_inf`` makes the value dimensionless;
    the sign convention of :func:`kernel_vectors` makes it independent of the
    sign and scale of ``u`` and ``v``.
    """
    if pair is None:
        pair = kernel_vectors(geom, config)
    hess = hessians_theta(geom, config)
    u, v = _orient(pair.u), _orient(pair.v)
    hmax = max(float(np.abs(H).sum(axis=1).max()) for H in hess)
    return second_order_form(hess, u, v) / (np.linalg.norm(u) * np.linalg.norm(v) ** 2 * hmax)


def first_row_cusp_value(geom: ManipulatorGeometry, config: Configuration) -> float:
    """Expanded cusp condition with u, v fixed to the first adjugate row/column."""
    k1, k2, k3, k4, k5, k6 = k_factors(geom, config)
    u = np.array([k1 * k2, -k2 * k5, k3 * k5])
    v = np.array([k1 * k2, k3 * k4, -k1 * k4])
    return second_order_form(hessians_theta(geom, config), u, v)
