"""Cusp points of a joint-space slice.

Algebraic path: the slice singularity polynomial ``F1(t, t1)`` and the
triple-coalescence polynomial ``E1(t, t1)`` are built exactly (``h`` kept
symbolic), ``t = tan(alpha/2)`` is eliminated by a resultant, the result is
factored, and the real roots of the degree-24 factor ``Q`` are back-substituted
into ``F1``.  Couples on which ``E1`` vanishes are kept only if direct
kinematics really shows three coincident solutions there.

The numeric path (:func:`find_cusps_numeric`) shares none of the symbolic
machinery: it follows the traced singular curves and looks for the points
where their image in ``(rho2, rho3)`` turns back.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from . import polyalg
from .differential import TOL_CUSP, RankDeficientError, cusp_condition, kernel_vectors
from .geometry import (
    ManipulatorGeometry,
    SliceCoords,
    angle_distance,
    config_from_slice,
    exact_decimal,
    wrap_angle,
)
from .kinematics import default_eps_cluster, direct_kinematics
from .polyalg import BivariatePolynomial, FactorizationResult, UnivariatePolynomial

TOL_E1 = 1e-6
DEDUP_RAD = 1e-6
DEFAULT_DIGITS = 100
# below this, candidate roots lose enough accuracy that true cusps fail verification
MIN_DIGITS = 40
Q_DEGREE = 24
MODES = ("algebraic", "full_resultant", "numeric")


@dataclass(frozen=True)
class CuspPoint:
    rho1: float
    alpha: float
    theta1: float
    rho2: float
    rho3: float
    verified: bool
    cluster_gap: float
    source: str
    t1_root_of_Q: Optional[bool] = None

    def to_dict(self) -> dict:
        return {
            "alpha_deg": math.degrees(self.alpha),
            "theta1_deg": math.degrees(self.theta1),
            "rho2": self.rho2,
            "rho3": self.rho3,
            "rho1": self.rho1,
            "verified": self.verified,
            "cluster_gap": self.cluster_gap,
            "source": self.source,
        }


@dataclass(frozen=True)
class Couple:
    """A candidate ``(alpha, theta1)`` at working precision, with its origin."""

    alpha: object
    theta1: object
    factor_index: int = -1

    def key(self) -> Tuple[float, float]:
        return float(self.alpha), float(self.theta1)


@dataclass
class EliminationTrace:
    F1: BivariatePolynomial
    E1: BivariatePolynomial
    resultant_poly: Optional[UnivariatePolynomial] = None
    factors: Optional[FactorizationResult] = None
    mode: str = "algebraic"
    candidates: int = 0
    filtered: int = 0
    verified: int = 0
    rejected: List[dict] = field(default_factory=list)
    q_audit: List[bool] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def degrees(self) -> dict:
        out = {
            "F1": [self.F1.degree("t"), self.F1.degree("t1"), self.F1.degree("h")],
            "E1": [self.E1.degree("t"), self.E1.degree("t1"), self.E1.degree("h")],
        }
        if self.resultant_poly is not None:
            out["resultant_t1"] = self.resultant_poly.degree
            out["resultant_h"] = self.resultant_poly.degree_h
        return out

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "degrees": self.degrees,
            "candidates": self.candidates,
            "filtered": self.filtered,
            "verified": self.verified,
            "rejected": self.rejected,
            "notes": self.notes,
        }
        if self.factors is not None:
            d.update(self.factors.summary())
        if self.q_audit:
            d["verified_t1_roots_of_Q"] = self.q_audit
        return d


# ---------------------------------------------------------------------------
# exact construction


def _exact_params(geom: ManipulatorGeometry, rho1):
    e = {k: polyalg.to_fmpq(v) for k, v in geom.exact.items()}
    return e, polyalg.to_fmpq(geom.exact_cos_beta), polyalg.to_fmpq(exact_decimal(rho1))


def _trig_slice_system(geom: ManipulatorGeometry, rho1):
    """Leg vectors and all derived trigonometric polynomials over (ca, sa, c1, s1, h)."""
    e, cb, r1 = _exact_params(geom, rho1)
    ca, sa, c1, s1, h = polyalg.trig_generators()
    A2x, A3x, A3y, d1, d3 = e["A2x"], e["A3x"], e["A3y"], e["d1"], e["d3"]
    sb = 0 * h if geom.is_flat else h / d3
    cab = ca * cb - sa * sb
    sab = sa * cb + ca * sb
    X2 = -A2x + r1 * c1 + d1 * ca
    Y2 = r1 * s1 + d1 * sa
    X3 = -A3x + r1 * c1 + d3 * cab
    Y3 = -A3y + r1 * s1 + d3 * sab
    return dict(A2x=A2x, A3x=A3x, A3y=A3y, r1=r1, c1=c1, s1=s1, X2=X2, Y2=Y2, X3=X3, Y3=Y3)


def slice_singularity_trig(geom: ManipulatorGeometry, rho1):
    """Leg-axis concurrency condition times ``rho2 rho3``, as a trigonometric polynomial."""
    return _concurrency_form(_trig_slice_system(geom, rho1))


def _concurrency_form(v):
    A2x, A3x, A3y, c1, s1 = v["A2x"], v["A3x"], v["A3y"], v["c1"], v["s1"]
    X2, Y2, X3, Y3 = v["X2"], v["Y2"], v["X3"], v["Y3"]
    return A2x * Y2 * (Y3 * c1 - X3 * s1) + (A3x * Y3 - A3y * X3) * (s1 * X2 - c1 * Y2)


def cusp_condition_trig(geom: ManipulatorGeometry, rho1):
    """``v^T (sum u_i H_i) v`` with ``u, v`` the first adjugate row/column.

    Every ``rho2``, ``rho3`` factor is absorbed into the leg vectors, so the
    result is a polynomial in the slice coordinates.
    """
    return _second_order_form(_trig_slice_system(geom, rho1))


def _second_order_form(v):
    """Shared by the exact polynomial build and high-precision evaluation."""
    A2x, A3x, A3y, r1, c1, s1 = v["A2x"], v["A3x"], v["A3y"], v["r1"], v["c1"], v["s1"]
    X2, Y2, X3, Y3 = v["X2"], v["Y2"], v["X3"], v["Y3"]
    P23 = Y2 * X3 - X2 * Y3
    C23 = X2 * X3 + Y2 * Y3
    k1 = 2 * ((A3x - A2x) * Y2 + P23 - A3y * X2)
    k2 = -2 * (r1 * (s1 * X3 - c1 * Y3) + A3x * Y3 - A3y * X3)
    k3 = -2 * ((A3x - A2x) * Y3 + P23 - A3y * X3)
    k4 = 2 * r1 * (s1 * X3 - c1 * Y3 + A3x * s1 - A3y * c1)
    k5 = -2 * (r1 * (s1 * X2 - c1 * Y2) + A2x * Y2)
    k6 = 2 * r1 * (s1 * X2 - c1 * Y2 + A2x * s1)
    C21 = X2 * c1 + Y2 * s1
    C31 = X3 * c1 + Y3 * s1
    z = 0 * X2
    H1 = [
        [2 * r1 * (A2x * c1 + C21), -2 * r1 * C21, z],
        [-2 * r1 * C21, -2 * (A2x * X2 - r1 * C21), z],
        [z, z, z],
    ]
    H2 = [
        [z, z, z],
        [z, -2 * ((A2x - A3x) * X2 - C23 - A3y * Y2), -2 * C23],
        [z, -2 * C23, 2 * ((A2x - A3x) * X3 + C23 - A3y * Y3)],
    ]
    H3 = [
        [2 * r1 * (A3x * c1 + C31 + A3y * s1), z, -2 * r1 * C31],
        [z, z, z],
        [-2 * r1 * C31, z, 2 * (r1 * C31 - A3x * X3 - A3y * Y3)],
    ]
    u = [k1 * k2, -k2 * k5, k3 * k5]
    w = [k1 * k2, k3 * k4, -k1 * k4]
    out = z
    for i in range(3):
        for j in range(3):
            m = u[0] * H1[i][j] + u[1] * H2[i][j] + u[2] * H3[i][j]
            if not (hasattr(m, "is_zero") and m.is_zero()):
                out += w[i] * m * w[j]
    return out


def _d_alpha(p):
    return -polyalg.TRIG.gens()[1] * p.derivative("ca") + polyalg.TRIG.gens()[0] * p.derivative("sa")


def _d_theta1(p):
    return -polyalg.TRIG.gens()[3] * p.derivative("c1") + polyalg.TRIG.gens()[2] * p.derivative("s1")


def fold_cusp_condition_trig(geom: ManipulatorGeometry, rho1):
    """Tangency of the slice map's kernel to the singular curve.

    With ``Phi = (rho2^2, rho3^2)`` as a function of ``(alpha, theta1)``, the
    kernel of ``dPhi`` on the singular curve is spanned by
    ``(dPhi2/dtheta1, -dPhi2/dalpha)``; cusps of the image are where it is
    tangent to the curve, i.e. orthogonal to the gradient of the singularity
    polynomial.
    """
    v = _trig_slice_system(geom, rho1)
    phi2 = v["X2"] * v["X2"] + v["Y2"] * v["Y2"]
    F = slice_singularity_trig(geom, rho1)
    return _d_alpha(F) * _d_theta1(phi2) - _d_theta1(F) * _d_alpha(phi2)


def build_F1(geom: ManipulatorGeometry, rho1) -> BivariatePolynomial:
    return polyalg.tan_half_substitute(slice_singularity_trig(geom, rho1), geom.exact_h_squared)


def build_E1(geom: ManipulatorGeometry, rho1) -> BivariatePolynomial:
    """Triple-coalescence polynomial of the slice.

    A collinear platform makes the side-length constraints infinitesimally
    flexible and the second-order condition vanishes on the whole singular
    curve; the fold-map condition of :func:`fold_cusp_condition_trig` is used
    instead.
    """
    if geom.is_flat:
        return polyalg.tan_half_substitute(fold_cusp_condition_trig(geom, rho1), geom.exact_h_squared)
    return polyalg.tan_half_substitute(cusp_condition_trig(geom, rho1), geom.exact_h_squared)


def eliminate_and_factor(F1: BivariatePolynomial, E1: BivariatePolynomial, target_degree: int = Q_DEGREE) -> EliminationTrace:
    """Resultant in ``t`` and its factorisation; ``candidate_Q`` when isolable."""
    trace = EliminationTrace(F1, E1)
    t0 = time.perf_counter()
    R = polyalg.resultant(F1, E1, "t")
    trace.timings["resultant"] = time.perf_counter() - t0
    trace.resultant_poly = R
    if R.is_zero:
        trace.notes.append("zero resultant: F1 and E1 share a factor")
        g = F1.poly.gcd(E1.poly)
        trace.notes.append(f"common factor degrees {[int(x) for x in g.degrees()]}")
        return trace
    t0 = time.perf_counter()
    trace.factors = polyalg.squarefree_factor(R, target_degree)
    trace.timings["factor"] = time.perf_counter() - t0
    return trace


# ---------------------------------------------------------------------------
# back-substitution


def _real_poly_roots(coeffs_asc, digits: int, imag_tol) -> list:
    c = list(coeffs_asc)
    cmax = max((abs(x) for x in c), default=0)
    while len(c) > 1 and abs(c[-1]) <= mpmath.mpf(10) ** (-digits // 2) * cmax:
        c.pop()
    if len(c) < 2:
        return []
    roots = mpmath.polyroots(c[::-1], maxsteps=400, extraprec=3 * digits, error=False)
    if not isinstance(roots, (list, tuple)):
        roots = [roots]
    out = []
    for r in roots:
        r = mpmath.mpc(r)
        if abs(r.imag) <= imag_tol * (1 + abs(r.real)):
            out.append(r.real)
    return out


def _degree_dropped(coeffs_asc, nominal: int, digits: int) -> bool:
    cmax = max(abs(x) for x in coeffs_asc)
    if len(coeffs_asc) <= nominal:
        return True
    return abs(coeffs_asc[nominal]) <= mpmath.mpf(10) ** (-digits // 2) * cmax


def candidates_from_Q(
    Q: UnivariatePolynomial,
    F1: BivariatePolynomial,
    rho1=None,
    digits: int = DEFAULT_DIGITS,
    factor_index: int = -1,
) -> List[Couple]:
    """Couples ``(alpha, theta1)`` with ``Q(tan(theta1/2)) = 0`` and ``F1 = 0``.

    ``theta1`` runs over the real roots of ``Q``; for each, ``F1`` is solved
    for ``t = tan(alpha/2)``.  A vanishing top coefficient of ``F1`` in ``t``
    adds the pole ``alpha = pi``.
    """
    out: List[Couple] = []
    if Q.degree < 1:
        return out
    eps = 10.0 ** (-min(30, digits // 3))
    with mpmath.workdps(digits):
        imag_tol = mpmath.mpf(10) ** (-(digits // 4))
        for enc in polyalg.real_roots(Q, eps_root=eps):
            t1 = polyalg._mp(enc.midpoint)
            theta1 = 2 * mpmath.atan(t1)
            coeffs = F1.coefficients_in("t", t1)
            for t in _real_poly_roots(coeffs, digits, imag_tol):
                out.append(Couple(2 * mpmath.atan(t), theta1, factor_index))
            if _degree_dropped(coeffs, F1.degree("t"), digits):
                out.append(Couple(+mpmath.pi, theta1, factor_index))
    return out


def pole_candidates(F1: BivariatePolynomial, digits: int = DEFAULT_DIGITS) -> List[Couple]:
    """Singular points at ``theta1 = pi`` or ``alpha = pi``, missed by tan-half."""
    out: List[Couple] = []
    with mpmath.workdps(digits):
        imag_tol = mpmath.mpf(10) ** (-(digits // 4))
        at_th = F1.leading_part("t1")  # polynomial in t
        if not at_th.is_zero and at_th.degree("t") >= 1:
            for t in _real_poly_roots(at_th.coefficients_in("t", 0), digits, imag_tol):
                out.append(Couple(2 * mpmath.atan(t), +mpmath.pi))
        at_al = F1.leading_part("t")  # polynomial in t1
        if not at_al.is_zero and at_al.degree("t1") >= 1:
            for t1 in _real_poly_roots(at_al.coefficients_in("t1", 0), digits, imag_tol):
                out.append(Couple(+mpmath.pi, 2 * mpmath.atan(t1)))
        if not at_th.is_zero and at_th.leading_part("t").is_zero:
            out.append(Couple(+mpmath.pi, +mpmath.pi))
    return out


def _tan_or_pole(angle):
    """``tan(angle/2)``, or ``None`` at the tan-half pole."""
    if abs(abs(angle) - mpmath.pi) < mpmath.mpf(10) ** (-(mpmath.mp.dps // 2)):
        return None
    return mpmath.tan(angle / 2)


def normalized_E1(E1: BivariatePolynomial, couple: Couple, digits: int = DEFAULT_DIGITS):
    with mpmath.workdps(digits):
        return E1.normalized_value(_tan_or_pole(couple.alpha), _tan_or_pole(couple.theta1))


def filter_by_E1(candidates: Sequence[Couple], E1: BivariatePolynomial, tol: float = TOL_E1, digits: int = DEFAULT_DIGITS) -> List[Couple]:
    return [c for c in candidates if normalized_E1(E1, c, digits) <= tol]


# ---------------------------------------------------------------------------
# verification


def slice_values_mp(geom: ManipulatorGeometry, rho1, alpha, theta1):
    """Leg vectors at the current mpmath precision, from exact geometry parameters."""
    e = geom.exact
    f = lambda k: mpmath.mpf(e[k].numerator) / e[k].denominator
    r = exact_decimal(rho1)
    r1 = mpmath.mpf(r.numerator) / r.denominator
    cb = mpmath.mpf(geom.exact_cos_beta.numerator) / geom.exact_cos_beta.denominator
    hs = geom.exact_h_squared
    sb = mpmath.sqrt(mpmath.mpf(hs.numerator) / hs.denominator) / f("d3")
    ca, sa = mpmath.cos(alpha), mpmath.sin(alpha)
    c1, s1 = mpmath.cos(theta1), mpmath.sin(theta1)
    cab, sab = ca * cb - sa * sb, sa * cb + ca * sb
    return dict(
        A2x=f("A2x"),
        A3x=f("A3x"),
        A3y=f("A3y"),
        r1=r1,
        c1=c1,
        s1=s1,
        X2=-f("A2x") + r1 * c1 + f("d1") * ca,
        Y2=r1 * s1 + f("d1") * sa,
        X3=-f("A3x") + r1 * c1 + f("d3") * cab,
        Y3=-f("A3y") + r1 * s1 + f("d3") * sab,
    )


def joint_lengths_mp(geom: ManipulatorGeometry, rho1, alpha, theta1, digits: int = DEFAULT_DIGITS):
    """``(rho2, rho3)`` at working precision from exact geometry parameters."""
    with mpmath.workdps(digits):
        v = slice_values_mp(geom, rho1, alpha, theta1)
        r1 = v["r1"]
        X2, Y2, X3, Y3 = v["X2"], v["Y2"], v["X3"], v["Y3"]
        return r1, mpmath.sqrt(X2 * X2 + Y2 * Y2), mpmath.sqrt(X3 * X3 + Y3 * Y3)


def verify_triple_coincidence(
    geom: ManipulatorGeometry,
    couple,
    rho1,
    digits: int = DEFAULT_DIGITS,
    eps_cluster: Optional[float] = None,
    sweep: int = 5,
) -> Tuple[bool, float]:
    """Direct kinematics at the couple's lengths; three solutions must coincide.

    The cluster holding the pose closest to the couple is inspected for
    ``eps`` swept over a decade below ``eps_cluster``; every value must show
    multiplicity ``>= 3``.  Returns ``(verified, cluster_gap)``.
    """
    alpha, theta1 = (couple.alpha, couple.theta1) if isinstance(couple, Couple) else couple
    eps_cluster = default_eps_cluster(geom) if eps_cluster is None else eps_cluster
    r1, r2, r3 = joint_lengths_mp(geom, rho1, alpha, theta1, digits)
    if min(r2, r3) <= 1e-12 * geom.length_scale:
        return False, math.inf
    sol = direct_kinematics(geom, (r1, r2, r3), mode="mp", digits=digits, eps_cluster=eps_cluster)
    if not sol.poses:
        return False, math.inf
    a, t = wrap_angle(float(alpha)), wrap_angle(float(theta1))
    nearest = min(
        range(sol.count),
        key=lambda i: max(
            angle_distance(sol.poses[i].alpha, a) * geom.d1,
            angle_distance(sol.poses[i].theta1, t) * float(r1),
        ),
    )
    gap = math.inf
    ok = True
    from .kinematics import cluster_solutions

    for eps in np.geomspace(eps_cluster / 10.0, eps_cluster, sweep):
        cl = next(c for c in cluster_solutions(geom, sol.poses, float(eps)) if nearest in c.members)
        if cl.multiplicity < 3:
            ok = False
        if eps == eps_cluster or abs(eps - eps_cluster) <= 1e-12 * eps_cluster:
            gap = cl.gap if cl.multiplicity >= 3 else math.inf
    return ok and gap <= eps_cluster, gap


# ---------------------------------------------------------------------------
# drivers


def _dedupe(couples: Sequence[Couple]) -> List[Couple]:
    out: List[Couple] = []
    for c in sorted(couples, key=lambda c: c.key()):
        if any(
            angle_distance(float(c.alpha), float(k.alpha)) <= DEDUP_RAD
            and angle_distance(float(c.theta1), float(k.theta1)) <= DEDUP_RAD
            for k in out
        ):
            continue
        out.append(c)
    return out


_ELIMINATION_CACHE: Dict[tuple, EliminationTrace] = {}


def _elimination(geom: ManipulatorGeometry, rho1) -> EliminationTrace:
    key = (geom, exact_decimal(rho1))
    if key not in _ELIMINATION_CACHE:
        t0 = time.perf_counter()
        F1, E1 = build_F1(geom, rho1), build_E1(geom, rho1)
        build = time.perf_counter() - t0
        tr = eliminate_and_factor(F1, E1)
        tr.timings["build"] = build
        if geom.is_flat:
            tr.notes.append("collinear platform: fold-map cusp condition used for E1")
        if len(_ELIMINATION_CACHE) > 16:
            _ELIMINATION_CACHE.clear()
        _ELIMINATION_CACHE[key] = tr
    base = _ELIMINATION_CACHE[key]
    return EliminationTrace(
        base.F1, base.E1, base.resultant_poly, base.factors, timings=dict(base.timings), notes=list(base.notes)
    )


def _q_root(Q: Optional[UnivariatePolynomial], theta1, digits) -> Optional[bool]:
    if Q is None:
        return None
    with mpmath.workdps(digits):
        t1 = _tan_or_pole(theta1)
        if t1 is None:
            return False
        A, B = Q.split_surd()
        val = Q.evaluate(t1)
        scale = sum(abs(polyalg._mp(a)) * abs(t1) ** i for i, a in enumerate(A))
        hv = mpmath.sqrt(polyalg._mp(Q.h_squared)) if Q.h_squared is not None else 0
        scale += hv * sum(abs(polyalg._mp(b)) * abs(t1) ** i for i, b in enumerate(B))
        return bool(abs(val) <= mpmath.mpf(10) ** (-digits // 4) * scale)


def find_cusps(
    geom: ManipulatorGeometry,
    rho1,
    mode: str = "algebraic",
    digits: int = DEFAULT_DIGITS,
    tol_E1: float = TOL_E1,
    eps_cluster: Optional[float] = None,
    resolution: int = 4096,
) -> Tuple[List[CuspPoint], EliminationTrace]:
    """Verified cusp points of the slice ``rho1``, sorted by ``(alpha, theta1)``.

    ``algebraic`` uses the degree-24 factor and falls back to
    ``full_resultant`` when none is isolable; ``numeric`` delegates to
    :func:`find_cusps_numeric` (the trace then only carries its counts).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not float(rho1) > 0:
        raise ValueError("rho1 must be positive")
    if digits < MIN_DIGITS:
        raise ValueError(f"cusp detection needs at least {MIN_DIGITS} digits")
    if mode == "numeric":
        cusps, stats = find_cusps_numeric(geom, rho1, resolution=resolution, eps_cluster=eps_cluster, with_stats=True)
        tr = EliminationTrace(build_F1(geom, rho1), build_E1(geom, rho1), mode="numeric")
        tr.candidates, tr.filtered, tr.verified = stats
        return cusps, tr
    trace = _elimination(geom, rho1)
    trace.mode = mode
    F1, E1 = trace.F1, trace.E1
    t0 = time.perf_counter()
    couples: List[Couple] = []
    Q = trace.factors.candidate_Q if trace.factors is not None else None
    if trace.factors is None:
        trace.notes.append("no factorisation available; nothing to back-substitute")
    elif mode == "algebraic" and Q is not None:
        couples = candidates_from_Q(Q, F1, rho1, digits)
    else:
        if mode == "algebraic":
            trace.notes.append("no degree-24 factor isolable; using the full square-free resultant")
            trace.mode = "full_resultant"
        for i, (f, _) in enumerate(trace.factors.factors):
            couples.extend(candidates_from_Q(f, F1, rho1, digits, factor_index=i))
    couples.extend(pole_candidates(F1, digits))
    couples = _dedupe(couples)
    trace.candidates = len(couples)
    filtered = filter_by_E1(couples, E1, tol_E1, digits)
    trace.filtered = len(filtered)
    cusps: List[CuspPoint] = []
    for c in filtered:
        ok, gap = verify_triple_coincidence(geom, c, rho1, digits, eps_cluster)
        r1, r2, r3 = joint_lengths_mp(geom, rho1, c.alpha, c.theta1, digits)
        rec = dict(alpha_deg=float(mpmath.degrees(c.alpha)), theta1_deg=float(mpmath.degrees(c.theta1)))
        if not ok:
            rec.update(rho2=float(r2), rho3=float(r3), reason="no triple coincidence")
            trace.rejected.append(rec)
            continue
        in_q = _q_root(Q, c.theta1, digits)
        cusps.append(
            CuspPoint(
                float(rho1),
                wrap_angle(float(c.alpha)),
                wrap_angle(float(c.theta1)),
                float(r2),
                float(r3),
                True,
                float(gap),
                "algebraic",
                in_q,
            )
        )
    cusps.sort(key=lambda p: (p.alpha, p.theta1))
    trace.verified = len(cusps)
    trace.q_audit = [p.t1_root_of_Q for p in cusps if p.t1_root_of_Q is not None]
    if trace.mode == "full_resultant" and Q is not None and not all(trace.q_audit):
        trace.notes.append("finding: a verified cusp is not a root of the degree-24 factor")
    trace.timings["roots_and_verification"] = time.perf_counter() - t0
    return cusps, trace


def polish_couple_mp(geom: ManipulatorGeometry, rho1, alpha: float, theta1: float, digits: int = 60):
    """High-precision Newton polish of a float cusp couple.

    The two equations are evaluated directly in mpmath at the couple, so this
    stays independent of the elimination path.  Flat platforms use the
    fold-map condition since the second-order form vanishes identically there.
    Returns ``None`` if the iteration fails to converge.
    """
    with mpmath.workdps(digits + 10):
        L = mpmath.mpf(float(rho1)) + sum(mpmath.mpf(x) for x in (geom.d1, geom.d2, geom.d3)) / 3
        sF = L**4

        def F(a, t):
            return _concurrency_form(slice_values_mp(geom, rho1, a, t)) / sF

        if geom.is_flat:

            def phi2(a, t):
                v = slice_values_mp(geom, rho1, a, t)
                return (v["X2"] ** 2 + v["Y2"] ** 2) / L**2

            def E(a, t):
                Fa, Ft = mpmath.diff(F, (a, t), (1, 0)), mpmath.diff(F, (a, t), (0, 1))
                Pa, Pt = mpmath.diff(phi2, (a, t), (1, 0)), mpmath.diff(phi2, (a, t), (0, 1))
                return Fa * Pt - Ft * Pa

        else:
            sE = L**14

            def E(a, t):
                return _second_order_form(slice_values_mp(geom, rho1, a, t)) / sE

        try:
            a, t = mpmath.findroot(
                lambda a, t: (F(a, t), E(a, t)),
                (mpmath.mpf(alpha), mpmath.mpf(theta1)),
                tol=mpmath.mpf(10) ** (-2 * digits + 10),
                maxsteps=60,
            )
        except (ValueError, ZeroDivisionError):
            return None
        if abs(a - alpha) > 1e-3 or abs(t - theta1) > 1e-3:
            return None
        return +a, +t


def find_cusps_numeric(
    geom: ManipulatorGeometry,
    rho1,
    resolution: int = 4096,
    eps_cluster: Optional[float] = None,
    digits: int = 60,
    with_stats: bool = False,
):
    """Cusps as folds of the traced singular curves' image in ``(rho2, rho3)``.

    Along each traced branch the image velocity is projected on a fixed
    direction; a sign change of its component along the branch tangent marks
    a turn-back.  Each bracket is refined by a 2-variable Newton solve of
    (slice singularity residual, triple-coalescence condition) evaluated in
    floating point from the differential module, polished in mpmath and
    verified by direct kinematics.
    """
    from .singular_slice import fold_candidates, refine_cusp

    eps_cluster = default_eps_cluster(geom) if eps_cluster is None else eps_cluster
    starts = fold_candidates(geom, float(rho1), resolution)
    refined = []
    for a, t in starts:
        r = refine_cusp(geom, float(rho1), a, t)
        if r is not None:
            refined.append(Couple(r[0], r[1]))
    refined = _dedupe(refined)
    cusps = []
    for c in refined:
        pol = polish_couple_mp(geom, rho1, c.alpha, c.theta1, digits)
        if pol is None:
            continue
        ok, gap = verify_triple_coincidence(geom, pol, rho1, digits, eps_cluster)
        if not ok:
            continue
        _, r2, r3 = joint_lengths_mp(geom, rho1, pol[0], pol[1], 30)
        cusps.append(
            CuspPoint(float(rho1), wrap_angle(c.alpha), wrap_angle(c.theta1), float(r2), float(r3), True, float(gap), "numeric")
        )
    cusps.sort(key=lambda p: (p.alpha, p.theta1))
    if with_stats:
        return cusps, (len(starts), len(refined), len(cusps))
    return cusps


def cusps_to_json(cusps: Sequence[CuspPoint], trace: Optional[EliminationTrace] = None) -> str:
    doc = {"cusps": [c.to_dict() for c in sorted(cusps, key=lambda c: c.alpha)]}
    if trace is not None:
        doc["trace"] = trace.to_dict()
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
