"""Independent reference computations used to cross-check the package.

Nothing here imports the package: direct kinematics is solved by scanning the
platform orientation and intersecting circles, which shares no code with the
sextic solver.
"""

from __future__ import annotations

import math

import numpy as np

REFERENCE = dict(A2x=15.91, A3x=0.0, A3y=10.0, d1=17.04, d2=16.54, d3=20.84)
SEGMENT = dict(A2x=3.0, A3x=1.1, A3y=2.7, d1=1.3, d2=0.9, d3=0.4)


def platform_angle(g) -> float:
    c = (g["d1"] ** 2 + g["d3"] ** 2 - g["d2"] ** 2) / (2 * g["d1"] * g["d3"])
    return math.acos(max(-1.0, min(1.0, c)))


def ik(g, x, y, alpha):
    """Leg lengths from a pose, by direct vertex placement."""
    beta = platform_angle(g)
    b1 = np.array([x, y])
    b2 = b1 + g["d1"] * np.array([math.cos(alpha), math.sin(alpha)])
    b3 = b1 + g["d3"] * np.array([math.cos(alpha + beta), math.sin(alpha + beta)])
    a2, a3 = np.array([g["A2x"], 0.0]), np.array([g["A3x"], g["A3y"]])
    return float(np.linalg.norm(b1)), float(np.linalg.norm(b2 - a2)), float(np.linalg.norm(b3 - a3))


def _closure(g, L, t, a):
    """Leg-2 and leg-3 closure residuals and their Jacobian, vectorized over arrays ``t``, ``a``."""
    beta = platform_angle(g)
    ct, st = np.cos(t), np.sin(t)
    x1, y1 = L[0] * ct, L[0] * st
    u2x, u2y = x1 + g["d1"] * np.cos(a) - g["A2x"], y1 + g["d1"] * np.sin(a)
    u3x = x1 + g["d3"] * np.cos(a + beta) - g["A3x"]
    u3y = y1 + g["d3"] * np.sin(a + beta) - g["A3y"]
    f = np.stack([u2x**2 + u2y**2 - L[1] ** 2, u3x**2 + u3y**2 - L[2] ** 2])
    dxt, dyt = -L[0] * st, L[0] * ct
    J = np.empty((2, 2) + np.shape(t))
    J[0, 0] = 2 * (u2x * dxt + u2y * dyt)
    J[0, 1] = 2 * (-u2x * g["d1"] * np.sin(a) + u2y * g["d1"] * np.cos(a))
    J[1, 0] = 2 * (u3x * dxt + u3y * dyt)
    J[1, 1] = 2 * (-u3x * g["d3"] * np.sin(a + beta) + u3y * g["d3"] * np.cos(a + beta))
    return f, J


def brute_force_dk(g, L, grid: int = 64, tol: float = 1e-10):
    """Platform orientations of all assembly modes, from a grid of Newton starts over (theta1, alpha)."""
    scale = max(L) ** 2 + max(g.values()) ** 2
    s = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    t, a = (m.ravel() for m in np.meshgrid(s, s))
    with np.errstate(all="ignore"):
        for _ in range(80):
            f, J = _closure(g, L, t, a)
            det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
            det = np.where(np.abs(det) < 1e-300, 1e-300, det)
            dt = (J[1, 1] * f[0] - J[0, 1] * f[1]) / det
            da = (-J[1, 0] * f[0] + J[0, 0] * f[1]) / det
            t = t - np.clip(np.nan_to_num(dt), -0.5, 0.5)
            a = a - np.clip(np.nan_to_num(da), -0.5, 0.5)
    f, _ = _closure(g, L, t, a)
    ok = np.abs(f).max(axis=0) <= tol * scale
    found = []
    for ti, ai in zip(t[ok], a[ok]):
        ti, ai = math.remainder(ti, 2 * math.pi), math.remainder(ai, 2 * math.pi)
        if all(abs(math.remainder(ai - b, 2 * math.pi)) + abs(math.remainder(ti - c, 2 * math.pi)) > 1e-6 for c, b in found):
            found.append((ti, ai))
    return sorted(b for _, b in found)
