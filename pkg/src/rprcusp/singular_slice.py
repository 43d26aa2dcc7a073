"""Singular curves of a joint-space slice and assembly-mode regions.

At fixed ``rho1`` a configuration is parametrised by the platform orientation
``alpha`` and the leg-1 angle ``theta1``.  The slice singularity residual is a
trigonometric polynomial of degree 2 in ``theta1`` for every ``alpha``, so each
``alpha`` column is solved exactly: the five Fourier coefficients are sampled,
turned into a quartic in ``tan(theta1/2)`` and isolated with
:func:`polyalg.real_roots`.  Roots of consecutive columns are then linked into
branches; where two roots of a column die together the branch turns back and
the turning point is solved for explicitly.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import polyalg
from .differential import TOL_SING, RankDeficientError, cusp_condition, kernel_vectors, normalized_det
from .geometry import (
    Configuration,
    DegenerateConfigurationError,
    ManipulatorGeometry,
    SliceCoords,
    config_from_slice,
    slice_to_joint,
    slice_vectors,
    wrap_angle,
)
from .kinematics import count_assembly_modes

TWO_PI = 2.0 * math.pi
LINK_RATIO = 0.3
MAX_REFINE_DEPTH = 8


# ---------------------------------------------------------------------------
# residuals


def singularity_residual_task(geom: ManipulatorGeometry, theta1: float, theta2: float, theta3: float) -> float:
    """Vanishes iff the three leg axes are concurrent or parallel."""
    s2, s3, c3 = math.sin(theta2), math.sin(theta3), math.cos(theta3)
    return geom.A2x * s2 * math.sin(theta3 - theta1) + (geom.A3x * s3 - geom.A3y * c3) * math.sin(theta1 - theta2)


def legs_concurrent(geom: ManipulatorGeometry, config: Configuration, tol: float = 1e-8) -> bool:
    """Common point (possibly at infinity) of the three leg lines.

    Each line is written ``a x + b y + c = 0`` with a unit normal and ``c``
    scaled by the geometry's length scale; the lines are concurrent iff the
    3x3 coefficient determinant vanishes.
    """
    return abs(concurrency_determinant(geom, config)) <= tol


def concurrency_determinant(geom: ManipulatorGeometry, config: Configuration) -> float:
    rows = []
    scale = geom.length_scale
    for (ax, ay), th in zip(geom.anchors, config.theta):
        a, b = -math.sin(th), math.cos(th)
        rows.append((a, b, -(a * ax + b * ay) / scale))
    return float(np.linalg.det(np.array(rows)))


def _slice_terms(geom, rho1, alpha, theta1):
    X2, Y2, X3, Y3 = slice_vectors(geom, rho1, alpha, theta1)
    c1, s1 = np.cos(theta1), np.sin(theta1)
    W = Y3 * c1 - X3 * s1
    V = geom.A3x * Y3 - geom.A3y * X3
    U = s1 * X2 - c1 * Y2
    return X2, Y2, X3, Y3, c1, s1, W, V, U


def slice_residual(geom: ManipulatorGeometry, rho1, alpha, theta1):
    """Concurrency residual times ``rho2 rho3``; numpy-broadcastable, no division."""
    _, Y2, _, _, _, _, W, V, U = _slice_terms(geom, rho1, alpha, theta1)
    return geom.A2x * Y2 * W + V * U


def slice_residual_scale(geom: ManipulatorGeometry, rho1, alpha, theta1):
    """Sum of absolute term magnitudes; the denominator for a relative residual."""
    X2, Y2, X3, Y3, c1, s1, W, V, U = _slice_terms(geom, rho1, alpha, theta1)
    return geom.A2x * np.abs(Y2) * (np.abs(Y3) + np.abs(X3)) + (
        abs(geom.A3x) * np.abs(Y3) + abs(geom.A3y) * np.abs(X3)
    ) * (np.abs(X2) + np.abs(Y2))


def normalized_slice_residual(geom, rho1, alpha, theta1):
    s = slice_residual_scale(geom, rho1, alpha, theta1)
    return slice_residual(geom, rho1, alpha, theta1) / np.maximum(s, 1e-300)


def singularity_residual_slice(geom: ManipulatorGeometry, sl: SliceCoords) -> float:
    r2, r3 = slice_to_joint(geom, sl.rho1, sl.alpha, sl.theta1)
    if min(r2, r3) <= 1e-14 * geom.length_scale:
        raise DegenerateConfigurationError("rho2 or rho3 vanishes")
    return float(slice_residual(geom, sl.rho1, sl.alpha, sl.theta1))


def slice_residual_grad(geom: ManipulatorGeometry, rho1: float, alpha: float, theta1: float):
    """``(F, dF/dalpha, dF/dtheta1)`` of :func:`slice_residual`."""
    X2, Y2, X3, Y3, c1, s1, W, V, U = (float(x) for x in _slice_terms(geom, rho1, alpha, theta1))
    A2x, A3x, A3y = geom.A2x, geom.A3x, geom.A3y
    ab = alpha + geom.beta
    F = A2x * Y2 * W + V * U

    def dF(dX2, dY2, dX3, dY3, dc1, ds1):
        dW = dY3 * c1 + Y3 * dc1 - dX3 * s1 - X3 * ds1
        dU = ds1 * X2 + s1 * dX2 - dc1 * Y2 - c1 * dY2
        dV = A3x * dY3 - A3y * dX3
        return A2x * (dY2 * W + Y2 * dW) + dV * U + V * dU

    sa, ca = math.sin(alpha), math.cos(alpha)
    Fa = dF(-geom.d1 * sa, geom.d1 * ca, -geom.d3 * math.sin(ab), geom.d3 * math.cos(ab), 0.0, 0.0)
    Ft = dF(-rho1 * s1, rho1 * c1, -rho1 * s1, rho1 * c1, -s1, c1)
    return F, Fa, Ft


def joint_velocity_matrix(geom: ManipulatorGeometry, rho1: float, alpha: float, theta1: float) -> np.ndarray:
    """d(rho2, rho3)/d(alpha, theta1)."""
    X2, Y2, X3, Y3 = (float(x) for x in slice_vectors(geom, rho1, alpha, theta1))
    r2, r3 = math.hypot(X2, Y2), math.hypot(X3, Y3)
    ab = alpha + geom.beta
    s1, c1 = math.sin(theta1), math.cos(theta1)
    return np.array(
        [
            [
                (X2 * -geom.d1 * math.sin(alpha) + Y2 * geom.d1 * math.cos(alpha)) / r2,
                (X2 * -rho1 * s1 + Y2 * rho1 * c1) / r2,
            ],
            [
                (X3 * -geom.d3 * math.sin(ab) + Y3 * geom.d3 * math.cos(ab)) / r3,
                (X3 * -rho1 * s1 + Y3 * rho1 * c1) / r3,
            ],
        ]
    )


# ---------------------------------------------------------------------------
# per-column root isolation


def _fourier_coefficients(geom, rho1, alpha):
    """``(a0, a1, b1, a2, b2)`` of the residual as a function of theta1."""
    n = 8
    th = np.arange(n) * (TWO_PI / n)
    f = np.fft.rfft(slice_residual(geom, rho1, alpha, th)) / n
    return f[0].real, 2 * f[1].real, -2 * f[1].imag, 2 * f[2].real, -2 * f[2].imag


def _tan_half_quartic(a0, a1, b1, a2, b2):
    """Ascending coefficients in ``u = tan(theta1/2)`` of residual * (1+u^2)^2."""
    # w = 1+u^2, cos = (1-u^2)/w, sin = 2u/w, cos2 = (w^2 - 8u^2)/w^2 ... expanded:
    c0 = a0 + a1 + a2
    c1 = 2 * b1 + 4 * b2
    c2 = 2 * a0 - 6 * a2
    c3 = 2 * b1 - 4 * b2
    c4 = a0 - a1 + a2
    return [c0, c1, c2, c3, c4]


def column_roots(geom: ManipulatorGeometry, rho1: float, alpha: float, polish: bool = True) -> List[float]:
    """All theta1 in (-pi, pi] with a vanishing slice residual at this alpha."""
    coeffs = _tan_half_quartic(*_fourier_coefficients(geom, rho1, alpha))
    cmax = max(abs(c) for c in coeffs)
    if cmax == 0:
        return []
    fr = [Fraction(c) for c in coeffs]
    roots: List[float] = []
    if abs(coeffs[4]) <= 1e-13 * cmax:
        fr[4] = Fraction(0)
        roots.append(math.pi)
    while fr and fr[-1] == 0:
        fr.pop()
    if len(fr) >= 2:
        p = polyalg.UnivariatePolynomial.from_coefficients(fr, "t1")
        for enc in polyalg.real_roots(p, eps_root=1e-13):
            roots.append(2.0 * math.atan(float(enc.midpoint)))
    if polish:
        roots = [_newton_theta(geom, rho1, alpha, t) for t in roots]
    roots = sorted(wrap_angle(t) for t in roots)
    return roots


def _newton_theta(geom, rho1, alpha, theta, iters: int = 6):
    for _ in range(iters):
        F, _, Ft = slice_residual_grad(geom, rho1, alpha, theta)
        if Ft == 0:
            break
        step = F / Ft
        if abs(step) > 1e-3:
            break
        theta -= step
        if abs(step) < 1e-15:
            break
    return theta


# ---------------------------------------------------------------------------
# curve tracing


@dataclass(frozen=True)
class Branch:
    alpha: np.ndarray
    theta1: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray
    residual: np.ndarray
    closed: bool

    def __len__(self):
        return len(self.alpha)


@dataclass(frozen=True)
class SingularCurveSet:
    rho1: float
    branches: Tuple[Branch, ...]
    resolution: int

    @property
    def vertex_count(self) -> int:
        return sum(len(b) for b in self.branches)

    def vertices(self) -> np.ndarray:
        """All vertices as rows ``(alpha, theta1, rho2, rho3)``."""
        if not self.branches:
            return np.zeros((0, 4))
        return np.vstack([np.column_stack([b.alpha, b.theta1, b.rho2, b.rho3]) for b in self.branches])

    def extent(self) -> Tuple[float, float]:
        v = self.vertices()
        if len(v) == 0:
            return 1.0, 1.0
        return float(v[:, 2].max()), float(v[:, 3].max())


def _wdist(a, b):
    return abs(math.remainder(a - b, TWO_PI))


def _turning_point(geom, rho1, alpha, theta):
    """Solve residual = d residual/d theta1 = 0 near ``(alpha, theta)``."""
    a, t = alpha, theta
    for _ in range(30):
        F, Fa, Ft = slice_residual_grad(geom, rho1, a, t)
        h = 1e-6
        _, Fa_p, Ft_p = slice_residual_grad(geom, rho1, a, t + h)
        _, Fa_m, Ft_m = slice_residual_grad(geom, rho1, a, t - h)
        Ftt = (Ft_p - Ft_m) / (2 * h)
        _, _, Ft_ap = slice_residual_grad(geom, rho1, a + h, t)
        _, _, Ft_am = slice_residual_grad(geom, rho1, a - h, t)
        Fta = (Ft_ap - Ft_am) / (2 * h)
        J = np.array([[Fa, Ft], [Fta, Ftt]])
        try:
            da, dt = np.linalg.solve(J, [F, Ft])
        except np.linalg.LinAlgError:
            return None
        if not (np.isfinite(da) and np.isfinite(dt)) or abs(da) > 0.1 or abs(dt) > 0.1:
            return None
        a, t = a - da, t - dt
        if abs(da) + abs(dt) < 1e-14:
            break
    if abs(_wdist(a, alpha)) > 0.05 or _wdist(t, theta) > 0.05:
        return None
    return wrap_angle(a), wrap_angle(t)


def _adjacent_removals(idx: Tuple[int, ...], k: int):
    """Ways to delete ``k`` disjoint cyclically adjacent pairs from ``idx``."""
    if k == 0:
        yield idx, ()
        return
    n = len(idx)
    if n < 2:
        return
    for i in range(n if n > 2 else 1):
        a, b = idx[i], idx[(i + 1) % n]
        rest = tuple(x for x in idx if x not in (a, b))
        for r, removed in _adjacent_removals(rest, k - 1):
            yield r, ((a, b),) + removed


def _match_columns(A: Sequence[float], B: Sequence[float]):
    """Order-preserving correspondence between the roots of consecutive columns.

    Returns ``(pairs, dying, born)``: matched index pairs, adjacent pairs of
    ``A`` that meet at a turning point before ``B``, and adjacent pairs of
    ``B`` that are born after ``A``.  Among all cyclic shifts and pair
    removals the one with the smallest total angular displacement wins.
    """
    m, n = len(A), len(B)
    best = None
    if (m - n) % 2 == 0:
        big_a = m >= n
        k = abs(m - n) // 2
        removals = list(_adjacent_removals(tuple(range(max(m, n))), k))
        for rest, removed in removals:
            gap = sum(_wdist(*((A if big_a else B)[i] for i in pair)) for pair in removed)
            ra = rest if big_a else tuple(range(m))
            rb = tuple(range(n)) if big_a else rest
            size = len(ra)
            shifts = range(size) if size else [0]
            for s in shifts:
                pairs = tuple((ra[i], rb[(i + s) % size]) for i in range(size))
                cost = gap + sum(_wdist(A[i], B[j]) for i, j in pairs)
                if best is None or cost < best[0]:
                    best = (cost, pairs, removed if big_a else (), () if big_a else removed)
    if best is None:
        # odd change: greedy nearest matching, leftovers become branch ends
        cand = sorted((_wdist(a, b), i, j) for i, a in enumerate(A) for j, b in enumerate(B))
        ua, ub, pairs = set(), set(), []
        for _, i, j in cand:
            if i not in ua and j not in ub:
                ua.add(i)
                ub.add(j)
                pairs.append((i, j))
        return pairs, (), ()
    return list(best[1]), best[2], best[3]


def _min_separation(roots: Sequence[float]) -> float:
    if len(roots) < 2:
        return TWO_PI
    r = sorted(roots)
    gaps = [b - a for a, b in zip(r, r[1:])] + [r[0] + TWO_PI - r[-1]]
    return min(gaps)


def _ambiguous(A: Sequence[float], B: Sequence[float]) -> bool:
    """Linking two columns is unsafe when counts differ or roots move comparably to their spacing."""
    if len(A) != len(B):
        return True
    if not A:
        return False
    pairs, _, _ = _match_columns(A, B)
    disp = max(_wdist(A[i], B[j]) for i, j in pairs)
    return disp > LINK_RATIO * min(_min_separation(A), _min_separation(B))


def _refined_columns(geom, rho1, base: np.ndarray, max_depth: int):
    """Base columns plus midpoints inserted wherever linking is ambiguous.

    Returns the ordered ``(alpha, roots)`` list; alphas increase from the first
    base column through one full turn (the last interval wraps around).
    """
    base_cols = [(float(a), column_roots(geom, rho1, float(a))) for a in base]
    out = []
    for k, (a0, r0) in enumerate(base_cols):
        out.append((a0, r0))
        a1, r1 = (base_cols[k + 1] if k + 1 < len(base_cols) else (base_cols[0][0] + TWO_PI, base_cols[0][1]))
        stack = [(a0, r0, a1, r1, 0)]
        inserted = []
        while stack:
            x0, q0, x1, q1, d = stack.pop()
            if d >= max_depth or not _ambiguous(q0, q1):
                continue
            xm = 0.5 * (x0 + x1)
            qm = column_roots(geom, rho1, wrap_angle(xm))
            inserted.append((xm, qm))
            stack.append((x0, q0, xm, qm, d + 1))
            stack.append((xm, qm, x1, q1, d + 1))
        out.extend(sorted(inserted, key=lambda c: c[0]))
    return out


def trace_slice_curves(
    geom: ManipulatorGeometry, rho1: float, resolution: int = 1024, max_depth: int = MAX_REFINE_DEPTH
) -> SingularCurveSet:
    """Singular curves of the slice as ordered polylines in ``(alpha, theta1)``.

    ``resolution`` uniform columns are refined by bisection wherever linking
    consecutive columns would be ambiguous, down to ``resolution * 2**max_depth``.
    """
    if not rho1 > 0:
        raise ValueError("rho1 must be positive")
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    N = resolution
    base = -math.pi + TWO_PI * (np.arange(N) + 1) / N
    columns = _refined_columns(geom, rho1, base, max_depth)
    cols = [c[1] for c in columns]
    xs = [c[0] for c in columns]
    M = len(columns)
    nodes: List[Tuple[float, float]] = []
    ids: List[List[int]] = []
    for k, rs in enumerate(cols):
        ids.append([])
        for t in rs:
            ids[-1].append(len(nodes))
            nodes.append((wrap_angle(xs[k]), t))
    adj: Dict[int, List[int]] = {i: [] for i in range(len(nodes))}
    for k in range(M):
        k2 = (k + 1) % M
        width = (xs[k2] if k2 else xs[0] + TWO_PI) - xs[k]
        h = 0.5 * width
        pairs, dying, born = _match_columns(cols[k], cols[k2])
        for i, j in pairs:
            adj[ids[k][i]].append(ids[k2][j])
            adj[ids[k2][j]].append(ids[k][i])
        for side, kk, group in ((1, k, dying), (-1, k2, born)):
            for i, j in group:
                p, q = ids[kk][i], ids[kk][j]
                a0 = nodes[p][0] + side * h
                tm = nodes[p][1] + 0.5 * math.remainder(nodes[q][1] - nodes[p][1], TWO_PI)
                tp = _turning_point(geom, rho1, a0, tm)
                if tp is not None:
                    m = len(nodes)
                    nodes.append(tp)
                    adj[m] = [p, q]
                    adj[p].append(m)
                    adj[q].append(m)
                else:
                    adj[p].append(q)
                    adj[q].append(p)
    branches = _extract_polylines(geom, rho1, nodes, adj)
    return SingularCurveSet(rho1, tuple(branches), N)


def _extract_polylines(geom, rho1, nodes, adj) -> List[Branch]:
    seen = set()
    paths = []
    order = sorted(range(len(nodes)), key=lambda n: (len(adj[n]) != 1, nodes[n]))
    for start in order:
        if start in seen:
            continue
        path = [start]
        seen.add(start)
        prev, cur = None, start
        closed = False
        while True:
            nxt = [n for n in adj[cur] if n != prev]
            if not nxt:
                break
            n = nxt[0]
            if n == start:
                closed = True
                break
            if n in seen:
                break
            path.append(n)
            seen.add(n)
            prev, cur = cur, n
        paths.append((path, closed))
    out = []
    for path, closed in paths:
        a = np.array([nodes[n][0] for n in path])
        t = np.array([nodes[n][1] for n in path])
        r2, r3 = slice_to_joint(geom, rho1, a, t)
        ok = (r2 > 1e-9 * geom.length_scale) & (r3 > 1e-9 * geom.length_scale)
        res = np.abs(normalized_slice_residual(geom, rho1, a, t))
        # excluded vertices split the polyline
        start = 0
        segs = []
        for i in range(len(path) + 1):
            if i == len(path) or not ok[i]:
                if i > start:
                    segs.append((start, i))
                start = i + 1
        for s, e in segs:
            c = closed and s == 0 and e == len(path)
            out.append(Branch(a[s:e], t[s:e], r2[s:e], r3[s:e], res[s:e], c))
    out = [b for b in out if len(b) >= 2 or b.closed]
    out = [_canonical(b) for b in out]
    out.sort(key=lambda b: (float(b.alpha.min()), float(b.theta1.min())))
    return out


def _canonical(b: Branch) -> Branch:
    """Closed loops start at their smallest (alpha, theta1) vertex."""
    if not b.closed:
        return b
    i = int(np.lexsort((b.theta1, b.alpha))[0])
    roll = lambda x: np.roll(x, -i)
    return Branch(roll(b.alpha), roll(b.theta1), roll(b.rho2), roll(b.rho3), roll(b.residual), True)


# ---------------------------------------------------------------------------
# fold (cusp) detection on traced curves


def _image_velocity(geom, rho1, a, t):
    _, Fa, Ft = slice_residual_grad(geom, rho1, a, t)
    tau = np.array([-Ft, Fa])
    n = np.linalg.norm(tau)
    if n == 0:
        return tau, np.zeros(2)
    tau /= n
    return tau, joint_velocity_matrix(geom, rho1, a, t) @ tau


def fold_candidates(geom: ManipulatorGeometry, rho1: float, resolution: int = 4096) -> List[Tuple[float, float]]:
    """Brackets on traced branches where the image in (rho2, rho3) turns back."""
    curves = trace_slice_curves(geom, rho1, resolution)
    out = []
    for b in curves.branches:
        n = len(b)
        if n < 3:
            continue
        vel = []
        prev_tau = None
        for i in range(n):
            a, t = float(b.alpha[i]), float(b.theta1[i])
            tau, v = _image_velocity(geom, rho1, a, t)
            # orient the tangent along the polyline
            j = i + 1 if i + 1 < n else i - 1
            step = np.array([math.remainder(b.alpha[j] - a, TWO_PI), math.remainder(b.theta1[j] - t, TWO_PI)])
            if j < i:
                step = -step
            if tau @ step < 0:
                v = -v
            vel.append(v)
        idx = range(n) if b.closed else range(n - 1)
        for i in idx:
            j = (i + 1) % n
            if vel[i] @ vel[j] < 0:
                am = float(b.alpha[i]) + 0.5 * math.remainder(float(b.alpha[j] - b.alpha[i]), TWO_PI)
                tm = float(b.theta1[i]) + 0.5 * math.remainder(float(b.theta1[j] - b.theta1[i]), TWO_PI)
                out.append((wrap_angle(am), wrap_angle(tm)))
    return out


def fold_map_condition(geom: ManipulatorGeometry, rho1: float, alpha: float, theta1: float, row: int) -> float:
    """Normalized ``grad F . k`` with ``k`` the kernel of row ``row`` of d(rho2, rho3)/d(alpha, theta1)."""
    _, Fa, Ft = slice_residual_grad(geom, rho1, alpha, theta1)
    M = joint_velocity_matrix(geom, rho1, alpha, theta1)
    k = np.array([M[row, 1], -M[row, 0]])
    return float((Fa * k[0] + Ft * k[1]) / max(math.hypot(Fa, Ft) * np.linalg.norm(k), 1e-300))


def refine_cusp(geom: ManipulatorGeometry, rho1: float, alpha: float, theta1: float, iters: int = 40):
    """Newton on (normalized slice residual, normalized cusp condition).

    The cusp condition is the second-order triple-coalescence form, with the
    adjugate row/column frozen at the starting point so it stays smooth along
    the iteration.  Collinear platforms use the fold-map condition instead
    (the second-order form vanishes on their whole singular curve).
    Returns ``(alpha, theta1)`` or ``None`` if the solve does not converge.
    """

    def cfg(a, t):
        return config_from_slice(geom, SliceCoords(rho1, a, t))

    try:
        if geom.is_flat:
            M = joint_velocity_matrix(geom, rho1, alpha, theta1)
            row = int(np.argmax(np.linalg.norm(M, axis=1)))
            second = lambda a, t, c: fold_map_condition(geom, rho1, a, t, row)
        else:
            pair0 = kernel_vectors(geom, cfg(alpha, theta1))
            ri, ci = pair0.row_index, pair0.col_index
            second = lambda a, t, c: cusp_condition(geom, c, kernel_vectors(geom, c, row_index=ri, col_index=ci))
    except (RankDeficientError, DegenerateConfigurationError):
        return None

    def G(a, t):
        c = cfg(a, t)
        F = float(normalized_slice_residual(geom, rho1, a, t))
        return np.array([F, second(a, t, c)])

    x = np.array([alpha, theta1], dtype=float)
    try:
        for _ in range(iters):
            g = G(*x)
            h = 1e-7
            J = np.column_stack([(G(*(x + e)) - G(*(x - e))) / (2 * h) for e in (np.array([h, 0.0]), np.array([0.0, h]))])
            dx = np.linalg.solve(J, g)
            if not np.all(np.isfinite(dx)):
                return None
            if np.abs(dx).max() > 0.2:
                dx *= 0.2 / np.abs(dx).max()
            x = x - dx
            if np.abs(dx).max() < 1e-14:
                break
        g = G(*x)
    except (RankDeficientError, DegenerateConfigurationError, np.linalg.LinAlgError):
        return None
    if abs(g[0]) > 1e-10 or abs(g[1]) > 1e-6:
        return None
    if _wdist(x[0], alpha) > 0.2 or _wdist(x[1], theta1) > 0.2:
        return None
    return wrap_angle(float(x[0])), wrap_angle(float(x[1]))


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class RegionMap:
    rho1: float
    rho2: np.ndarray  # cell centers, length N
    rho3: np.ndarray
    counts: np.ndarray  # shape (N, N), indexed [i2, i3]
    boundary: np.ndarray
    bounds: Tuple[float, float, float, float]

    @property
    def spacing(self) -> Tuple[float, float]:
        b = self.bounds
        return (b[1] - b[0]) / len(self.rho2), (b[3] - b[2]) / len(self.rho3)

    def observed_counts(self, interior_only: bool = True) -> set:
        c = self.counts[~self.boundary] if interior_only else self.counts.ravel()
        return set(int(x) for x in np.unique(c))


def default_bounds(curves: SingularCurveSet) -> Tuple[float, float, float, float]:
    m2, m3 = curves.extent()
    return 0.0, 1.2 * m2, 0.0, 1.2 * m3


def label_regions(
    geom: ManipulatorGeometry,
    rho1: float,
    grid: int = 60,
    bounds: Optional[Tuple[float, float, float, float]] = None,
    curves: Optional[SingularCurveSet] = None,
) -> RegionMap:
    """Assembly-mode count at the centre of every cell of a (rho2, rho3) grid."""
    if grid < 1:
        raise ValueError("grid must be positive")
    if curves is None:
        curves = trace_slice_curves(geom, rho1, 512)
    if bounds is None:
        bounds = default_bounds(curves)
    lo2, hi2, lo3, hi3 = bounds
    if not (hi2 > lo2 >= 0 and hi3 > lo3 >= 0):
        raise ValueError("bounds must be non-negative and increasing")
    h2, h3 = (hi2 - lo2) / grid, (hi3 - lo3) / grid
    r2 = lo2 + h2 * (np.arange(grid) + 0.5)
    r3 = lo3 + h3 * (np.arange(grid) + 0.5)
    counts = np.zeros((grid, grid), dtype=int)
    for i, a in enumerate(r2):
        for j, b in enumerate(r3):
            counts[i, j] = count_assembly_modes(geom, (rho1, float(a), float(b)))
    boundary = np.zeros((grid, grid), dtype=bool)
    v = curves.vertices()
    if len(v):
        i2 = np.floor((v[:, 2] - lo2) / h2).astype(int)
        i3 = np.floor((v[:, 3] - lo3) / h3).astype(int)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                a, b = i2 + di, i3 + dj
                ok = (a >= 0) & (a < grid) & (b >= 0) & (b < grid)
                boundary[a[ok], b[ok]] = True
    return RegionMap(rho1, r2, r3, counts, boundary, (lo2, hi2, lo3, hi3))


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    return format(float(x), ".15g")


def write_slice_csv(curves: SingularCurveSet, path) -> None:
    buf = io.StringIO()
    buf.write("alpha_rad,theta1_rad,rho2,rho3,branch_id,residual\n")
    for k, b in enumerate(curves.branches):
        for i in range(len(b)):
            buf.write(
                ",".join(
                    (_fmt(b.alpha[i]), _fmt(b.theta1[i]), _fmt(b.rho2[i]), _fmt(b.rho3[i]), str(k), _fmt(b.residual[i]))
                )
                + "\n"
            )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_regions_csv(regions: RegionMap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("rho2,rho3,count\n")
        for i, a in enumerate(regions.rho2):
            for j, b in enumerate(regions.rho3):
                fh.write(f"{_fmt(a)},{_fmt(b)},{int(regions.counts[i, j])}\n")


def _split_jumps(xs, ys, limit):
    """Break a polyline where consecutive image points jump (wrap or excluded vertex)."""
    parts, cur = [], [(xs[0], ys[0])]
    for x, y in zip(xs[1:], ys[1:]):
        if math.hypot(x - cur[-1][0], y - cur[-1][1]) > limit:
            parts.append(cur)
            cur = []
        cur.append((x, y))
    parts.append(cur)
    return [p for p in parts if len(p) >= 2]


def slice_svg(curves: SingularCurveSet, cusps: Sequence = (), size: int = 600, bounds=None) -> str:
    """SVG of the branches in the (rho2, rho3) plane, cusps as circles."""
    lo2, hi2, lo3, hi3 = bounds if bounds is not None else default_bounds(curves)
    margin = 50
    w = size
    sx = (w - 2 * margin) / (hi2 - lo2)
    sy = (w - 2 * margin) / (hi3 - lo3)
    s = min(sx, sy)  # fixed aspect ratio
    X = lambda x: margin + (x - lo2) * s
    Y = lambda y: w - margin - (y - lo3) * s
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">',
        f'<rect x="0" y="0" width="{w}" height="{w}" fill="white"/>',
        f'<line x1="{margin}" y1="{w - margin}" x2="{w - margin}" y2="{w - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{w - margin}" x2="{margin}" y2="{margin}" stroke="black"/>',
        f'<text x="{w / 2:.1f}" y="{w - 15}" font-size="14" text-anchor="middle">&#961;2</text>',
        f'<text x="15" y="{w / 2:.1f}" font-size="14" text-anchor="middle">&#961;3</text>',
        f'<text x="{w / 2:.1f}" y="25" font-size="14" text-anchor="middle">&#961;1 = {curves.rho1:g}</text>',
    ]
    limit = 0.1 * max(hi2 - lo2, hi3 - lo3)
    for k, b in enumerate(curves.branches):
        xs, ys = list(b.rho2), list(b.rho3)
        if b.closed:
            xs.append(xs[0])
            ys.append(ys[0])
        for part in _split_jumps(xs, ys, limit):
            d = " ".join(("M" if i == 0 else "L") + f"{X(x):.2f},{Y(y):.2f}" for i, (x, y) in enumerate(part))
            out.append(f'<path id="branch-{k}" d="{d}" fill="none" stroke="black" stroke-width="1"/>')
    for c in cusps:
        out.append(f'<circle cx="{X(c.rho2):.2f}" cy="{Y(c.rho3):.2f}" r="5" fill="none" stroke="red" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_slice_svg(curves: SingularCurveSet, path, cusps: Sequence = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(slice_svg(curves, cusps))


def vertex_singularity_checks(geom: ManipulatorGeometry, rho1: float, alpha: float, theta1: float) -> Tuple[float, float, float]:
    """(normalized residual, normalized det J_theta, concurrency determinant) at a vertex."""
    cfg = config_from_slice(geom, SliceCoords(rho1, alpha, theta1))
    return (
        float(normalized_slice_residual(geom, rho1, alpha, theta1)),
        normalized_det(geom, cfg),
        concurrency_determinant(geom, cfg),
    )
