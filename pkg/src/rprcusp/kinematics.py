"""Direct kinematics with all assembly modes, and coincidence clustering.

For fixed leg lengths the unknowns are the leg-1 angle ``theta1`` and the
platform orientation ``alpha``.  Both remaining leg equations are linear in
``(cos theta1, sin theta1)``::

    P_i cos(theta1) + Q_i sin(theta1) + R_i = 0,   i = 2, 3

with ``P_i, Q_i, R_i`` affine in ``(cos alpha, sin alpha)``.  Cramer's rule
plus ``cos^2 + sin^2 = 1`` leaves one trigonometric quartic in ``alpha``; in
``t = tan(alpha/2)`` it has degree 8 and always carries the factor ``1+t^2``,
which is divided out to give the classical sextic.

Two precisions share the same code: ``mode="float"`` (numpy roots, used for
region counting and batch work) and ``mode="mp"`` (mpmath at ``digits``
decimal digits, used to decide whether three solutions coincide).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

import mpmath
import numpy as np

from .geometry import (
    Configuration,
    ManipulatorGeometry,
    PlatformPose,
    angle_distance,
    inverse_kinematics,
    wrap_angle,
)

TOL_RESIDUAL = 1e-9
MAX_NEWTON = 50


@dataclass(frozen=True)
class DKPose:
    pose: PlatformPose
    theta1: float
    residual: float

    @property
    def alpha(self) -> float:
        return self.pose.alpha


@dataclass(frozen=True)
class Cluster:
    """Real poses within ``eps_cluster`` of each other.

    ``near_real`` counts non-real sextic roots whose orientation lies within
    ``eps_cluster`` of a member.  Rounded leg lengths split a multiple root
    into real and complex parts; ``root_multiplicity`` sees through that.
    A pair with no real pose nearby forms a cluster with empty ``members``.
    """

    members: Tuple[int, ...]
    gap: float
    near_real: int = 0

    @property
    def multiplicity(self) -> int:
        return len(self.members)

    @property
    def root_multiplicity(self) -> int:
        return len(self.members) + self.near_real


@dataclass(frozen=True)
class DKSolutionSet:
    lengths: Tuple[float, float, float]
    poses: Tuple[DKPose, ...]
    clusters: Tuple[Cluster, ...]
    eps_cluster: float
    diagnostics: Tuple[str, ...] = ()

    @property
    def count(self) -> int:
        return len(self.poses)

    @property
    def max_multiplicity(self) -> int:
        return max((c.multiplicity for c in self.clusters), default=0)

    @property
    def max_root_multiplicity(self) -> int:
        return max((c.root_multiplicity for c in self.clusters), default=0)

    def configurations(self, geom: ManipulatorGeometry) -> List[Configuration]:
        return [inverse_kinematics(geom, p.pose) for p in self.poses]


ESCALATE_IMAG = 1e-3
ESCALATE_DIGITS = 40


def default_eps_cluster(geom: ManipulatorGeometry) -> float:
    return 1e-4 * (geom.d1 + geom.d2 + geom.d3) / 3.0


# ---------------------------------------------------------------------------
# numeric back-ends


class _Num:
    """Arithmetic namespace: plain floats or mpmath numbers."""

    def __init__(self, mode: str, digits: int):
        self.mode = mode
        self.digits = digits
        if mode == "float":
            self.cos, self.sin, self.atan2, self.sqrt = math.cos, math.sin, math.atan2, math.sqrt
            self.pi = math.pi
            self.eps = 2.2e-16
        elif mode == "mp":
            self.cos, self.sin, self.atan2, self.sqrt = mpmath.cos, mpmath.sin, mpmath.atan2, mpmath.sqrt
            self.pi = mpmath.pi
            self.eps = mpmath.mpf(10) ** (-digits)
        else:
            raise ValueError(f"unknown mode {mode!r}")

    def num(self, x):
        if self.mode == "float":
            return float(x)
        return mpmath.mpf(x) if not hasattr(x, "numerator") else mpmath.mpf(x.numerator) / x.denominator


def _params(geom: ManipulatorGeometry, num: _Num):
    if num.mode == "float":
        return geom.A2x, geom.A3x, geom.A3y, geom.d1, geom.d3, math.cos(geom.beta), math.sin(geom.beta)
    e = geom.exact
    cb = num.num(geom.exact_cos_beta)
    sb = num.sqrt(num.num(geom.exact_h_squared)) / num.num(e["d3"])
    return tuple(num.num(e[k]) for k in ("A2x", "A3x", "A3y", "d1", "d3")) + (cb, sb)


def _pmul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def _padd(*ps):
    n = max(len(p) for p in ps)
    out = [0] * n
    for p in ps:
        for i, x in enumerate(p):
            out[i] = out[i] + x
    return out


def _pscale(p, k):
    return [k * x for x in p]


def sextic_coefficients(geom: ManipulatorGeometry, L, mode: str = "float", digits: int = 50):
    """Ascending coefficients of the DK sextic in ``t = tan(alpha/2)`` and the remainder.

    The remainder of the division by ``1+t^2`` is returned too; it is zero in
    exact arithmetic and serves as a rounding diagnostic.
    """
    num = _Num(mode, digits)
    with mpmath.workdps(digits):
        return _sextic(geom, [num.num(x) for x in L], num)


def _leg_polys(par, r1, r2, r3):
    A2x, A3x, A3y, d1, d3, cb, sb = par
    one_m = [1, 0, -1]  # 1 - t^2
    two_t = [0, 2]
    w = [1, 0, 1]
    cab = _padd(_pscale(one_m, cb), _pscale(two_t, -sb))
    sab = _padd(_pscale(two_t, cb), _pscale(one_m, sb))
    P2 = _pscale(_padd(_pscale(one_m, d1), _pscale(w, -A2x)), 2 * r1)
    Q2 = _pscale(two_t, 2 * r1 * d1)
    R2 = _padd(_pscale(w, r1 * r1 + d1 * d1 + A2x * A2x - r2 * r2), _pscale(one_m, -2 * A2x * d1))
    P3 = _pscale(_padd(_pscale(cab, d3), _pscale(w, -A3x)), 2 * r1)
    Q3 = _pscale(_padd(_pscale(sab, d3), _pscale(w, -A3y)), 2 * r1)
    R3 = _padd(
        _pscale(w, r1 * r1 + d3 * d3 + A3x * A3x + A3y * A3y - r3 * r3),
        _pscale(cab, -2 * d3 * A3x),
        _pscale(sab, -2 * d3 * A3y),
    )
    return P2, Q2, R2, P3, Q3, R3


def degree8_form(par, L):
    """Ascending coefficients in ``t`` of the eliminant before removing ``1+t^2``.

    Works on any numeric or symbolic coefficient type.
    """
    P2, Q2, R2, P3, Q3, R3 = _leg_polys(par, *L)
    a = _padd(_pmul(R3, Q2), _pscale(_pmul(R2, Q3), -1))
    b = _padd(_pmul(R2, P3), _pscale(_pmul(R3, P2), -1))
    d = _padd(_pmul(P2, Q3), _pscale(_pmul(P3, Q2), -1))
    s8 = _padd(_pmul(a, a), _pmul(b, b), _pscale(_pmul(d, d), -1))
    return s8 + [0] * (9 - len(s8))


def _sextic(geom, L, num):
    s8 = degree8_form(_params(geom, num), L)
    # synthetic division by t^2 + 1, from the top
    q = [0] * 7
    rem = list(s8)
    for k in range(8, 1, -1):
        q[k - 2] = rem[k]
        rem[k - 2] = rem[k - 2] - rem[k]
        rem[k] = 0
    return q, (rem[0], rem[1])


def _trig_coeffs(par, r1, r2, r3, ca, sa):
    A2x, A3x, A3y, d1, d3, cb, sb = par
    cab = ca * cb - sa * sb
    sab = sa * cb + ca * sb
    P2 = 2 * r1 * (d1 * ca - A2x)
    Q2 = 2 * r1 * d1 * sa
    R2 = r1 * r1 + d1 * d1 + A2x * A2x - 2 * A2x * d1 * ca - r2 * r2
    P3 = 2 * r1 * (d3 * cab - A3x)
    Q3 = 2 * r1 * (d3 * sab - A3y)
    R3 = r1 * r1 + d3 * d3 + A3x * A3x + A3y * A3y - 2 * d3 * (A3x * cab + A3y * sab) - r3 * r3
    # alpha-derivatives
    dP2, dQ2, dR2 = -2 * r1 * d1 * sa, 2 * r1 * d1 * ca, 2 * A2x * d1 * sa
    dP3, dQ3 = -2 * r1 * d3 * sab, 2 * r1 * d3 * cab
    dR3 = -2 * d3 * (-A3x * sab + A3y * cab)
    return (P2, Q2, R2, P3, Q3, R3), (dP2, dQ2, dR2, dP3, dQ3, dR3)


def _residuals(par, L, th1, al, num):
    (P2, Q2, R2, P3, Q3, R3), (dP2, dQ2, dR2, dP3, dQ3, dR3) = _trig_coeffs(
        par, *L, num.cos(al), num.sin(al)
    )
    c1, s1 = num.cos(th1), num.sin(th1)
    g = (P2 * c1 + Q2 * s1 + R2, P3 * c1 + Q3 * s1 + R3)
    J = (
        (-P2 * s1 + Q2 * c1, dP2 * c1 + dQ2 * s1 + dR2),
        (-P3 * s1 + Q3 * c1, dP3 * c1 + dQ3 * s1 + dR3),
    )
    return g, J


def _polish(par, L, th1, al, num, scale2):
    """Damped Newton on the two leg residuals; returns the best iterate."""
    g, J = _residuals(par, L, th1, al, num)
    best = (max(abs(g[0]), abs(g[1])), th1, al)
    for _ in range(MAX_NEWTON):
        if best[0] <= num.eps * 16 * scale2:
            break
        det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
        if det == 0:
            break
        dth = (J[1][1] * g[0] - J[0][1] * g[1]) / det
        dal = (-J[1][0] * g[0] + J[0][0] * g[1]) / det
        step = 1
        improved = False
        for _ in range(8):
            nt, na = th1 - step * dth, al - step * dal
            ng, nJ = _residuals(par, L, nt, na, num)
            r = max(abs(ng[0]), abs(ng[1]))
            if r < best[0]:
                th1, al, g, J = nt, na, ng, nJ
                best = (r, th1, al)
                improved = True
                break
            step = step / 2
        if not improved:
            break
    return best


def _cos_sin_from_alpha(par, L, ca, sa, num, scale2):
    """All (c1, s1) on the unit circle solving both leg equations at this alpha."""
    (P2, Q2, R2, P3, Q3, R3), _ = _trig_coeffs(par, *L, ca, sa)
    delta = P2 * Q3 - P3 * Q2
    norm = max(abs(P2), abs(Q2), abs(P3), abs(Q3), 1e-300) ** 2
    if abs(delta) > 1e-10 * norm:
        return [((R3 * Q2 - R2 * Q3) / delta, (R2 * P3 - R3 * P2) / delta)]
    # Parallel lines in (c1, s1): intersect the better-conditioned one with the circle.
    if P2 * P2 + Q2 * Q2 >= P3 * P3 + Q3 * Q3:
        P, Q, R = P2, Q2, R2
    else:
        P, Q, R = P3, Q3, R3
    n2 = P * P + Q * Q
    if n2 == 0:
        return []
    disc = n2 - R * R
    if disc < -1e-8 * n2:
        return []
    root = num.sqrt(max(disc, 0 * disc))
    out = []
    for sgn in (1, -1):
        out.append(((-P * R + sgn * Q * root) / n2, (-Q * R - sgn * P * root) / n2))
    return out


def pose_distance(geom: ManipulatorGeometry, a: DKPose, b: DKPose) -> float:
    db = math.hypot(a.pose.b1[0] - b.pose.b1[0], a.pose.b1[1] - b.pose.b1[1])
    return max(db, geom.d1 * angle_distance(a.alpha, b.alpha))


def cluster_solutions(geom: ManipulatorGeometry, poses: Sequence[DKPose], eps_cluster: float) -> Tuple[Cluster, ...]:
    """Transitive closure of ``pose_distance <= eps_cluster``."""
    if eps_cluster <= 0:
        raise ValueError("eps_cluster must be positive")
    n = len(poses)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if pose_distance(geom, poses[i], poses[j]) <= eps_cluster:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        gap = max(
            (pose_distance(geom, poses[i], poses[j]) for i in members for j in members if i < j),
            default=0.0,
        )
        out.append(Cluster(tuple(members), gap))
    out.sort(key=lambda c: c.members[0])
    return tuple(out)


def direct_kinematics(
    geom: ManipulatorGeometry,
    L: Sequence,
    mode: str = "float",
    digits: int = 50,
    eps_cluster: float | None = None,
    imag_tol: float | None = None,
) -> DKSolutionSet:
    """All real assembly modes for leg lengths ``L``.

    Roots of the sextic whose imaginary part is below ``imag_tol`` (relative
    to ``1+|t|^2``) are treated as real; each is back-substituted, polished by
    damped Newton and kept only if the normalized leg residual is below
    ``1e-9``.  A vanishing leading coefficient signals a root at ``alpha = pi``,
    which is then tried directly.
    """
    if any(float(x) < 0 for x in L):
        raise ValueError("leg lengths must be non-negative")
    eps_cluster = default_eps_cluster(geom) if eps_cluster is None else eps_cluster
    num = _Num(mode, digits)
    if imag_tol is None:
        imag_tol = 1e-6 if mode == "float" else 1e-8
    diags: List[str] = []
    Lf = tuple(float(x) for x in L)
    with mpmath.workdps(digits if mode == "mp" else mpmath.mp.dps):
        Ln = [num.num(x) if not isinstance(x, mpmath.mpf) else x for x in L]
        if mode == "float":
            Ln = [float(x) for x in L]
        if float(Ln[0]) <= 1e-14 * geom.length_scale:
            return DKSolutionSet(Lf, (), (), eps_cluster, ("rho1 = 0: leg-1 angle undefined",))
        par = _params(geom, num)
        scale = max(geom.length_scale, *(abs(float(x)) for x in Lf))
        scale2 = scale * scale
        q, _ = _sextic(geom, Ln, num)
        cmax = max(abs(c) for c in q)
        if cmax == 0:
            return DKSolutionSet(Lf, (), (), eps_cluster, ("sextic vanishes identically",))
        alphas = []
        complex_alphas: List[complex] = []
        deg = 6
        while deg > 0 and abs(q[deg]) <= 1e-10 * cmax:
            deg -= 1
        if deg < 6:
            # 6 - deg roots sit at alpha = pi; one real candidate stands for
            # them, the rest only raise the root multiplicity there.
            alphas.append(num.pi)
            complex_alphas.extend([complex(math.pi, 0.0)] * (5 - deg))
        escalate = False
        if deg > 0:
            if mode == "float":
                roots = np.roots(np.array(q[: deg + 1][::-1], dtype=float))
            else:
                roots = mpmath.polyroots(q[: deg + 1][::-1], maxsteps=200, extraprec=4 * digits, error=False)
            for r in roots:
                re, im = (float(r.real), float(r.imag)) if mode == "float" else (r.real, r.imag)
                if abs(im) <= imag_tol * (1 + re * re):
                    alphas.append(2 * (math.atan(re) if mode == "float" else mpmath.atan(re)))
                else:
                    if mode == "float" and abs(im) <= ESCALATE_IMAG * (1 + re * re):
                        escalate = True
                    complex_alphas.append(2 * complex(mpmath.atan(mpmath.mpc(float(re), float(im)))))
        if escalate:
            # A complex pair hugging the real axis: a near-multiple root that
            # double precision cannot resolve.  Redo the solve in mpmath.
            sol = direct_kinematics(geom, L, "mp", ESCALATE_DIGITS, eps_cluster)
            return replace(sol, diagnostics=sol.diagnostics + ("near-multiple root: solved at higher precision",))
        raw = []
        for al in alphas:
            ca, sa = num.cos(al), num.sin(al)
            for c1, s1 in _cos_sin_from_alpha(par, Ln, ca, sa, num, scale2):
                th = num.atan2(s1, c1)
                res, th, al2 = _polish(par, Ln, th, al, num, scale2)
                rel = float(res) / scale2
                if rel <= TOL_RESIDUAL:
                    raw.append((th, al2, rel))
                else:
                    diags.append(f"unpolishable candidate alpha={float(al):.6g} residual={rel:.3g}")
        poses = []
        r1 = float(Ln[0])
        for th, al, rel in raw:
            thf, alf = wrap_angle(float(th)), wrap_angle(float(al))
            poses.append(DKPose(PlatformPose((r1 * math.cos(thf), r1 * math.sin(thf)), alf), thf, rel))
    poses.sort(key=lambda p: (p.alpha, p.theta1))
    poses = _drop_pole_duplicates(geom, poses, deg, eps_cluster)
    clusters = cluster_solutions(geom, poses, eps_cluster) if poses else ()
    clusters = tuple(_attach_near_real(geom, poses, c, complex_alphas, eps_cluster) for c in clusters)
    clusters += _unrealized_pairs(geom, poses, complex_alphas, eps_cluster)
    return DKSolutionSet(Lf, tuple(poses), clusters, eps_cluster, tuple(diags))


def _attach_near_real(geom, poses, cluster: Cluster, complex_alphas, eps) -> Cluster:
    n = 0
    for z in complex_alphas:
        for i in cluster.members:
            d = abs(complex(math.remainder(z.real - poses[i].alpha, 2 * math.pi), z.imag))
            if geom.d1 * d <= eps:
                n += 1
                break
    return Cluster(cluster.members, cluster.gap, n) if n else cluster


def _unrealized_pairs(geom, poses, complex_alphas, eps) -> Tuple[Cluster, ...]:
    """Conjugate pairs within ``eps`` of the real axis and of no real pose.

    Rounded lengths on a singular curve turn its double root into such a pair;
    it is reported as a cluster with no real members.
    """
    out = []
    for z in complex_alphas:
        if z.imag <= 0 or geom.d1 * z.imag > eps:
            continue
        if any(geom.d1 * abs(complex(math.remainder(z.real - p.alpha, 2 * math.pi), z.imag)) <= eps for p in poses):
            continue
        out.append((wrap_angle(z.real), Cluster((), 2 * geom.d1 * z.imag, 2)))
    return tuple(c for _, c in sorted(out, key=lambda x: x[0]))


def _drop_pole_duplicates(geom, poses, deg, eps):
    """A degree drop adds alpha = pi; do not count it twice if a finite root also reached it."""
    if deg == 6 or len(poses) <= 6:
        return poses
    keep = []
    for p in poses:
        if any(pose_distance(geom, p, k) <= 1e-3 * eps for k in keep):
            continue
        keep.append(p)
    return keep


def count_assembly_modes(geom: ManipulatorGeometry, L: Sequence) -> int:
    """Number of real DK solutions (0, 2, 4 or 6 at generic lengths)."""
    return direct_kinematics(geom, L).count
