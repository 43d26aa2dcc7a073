"""Planar 3-RPR manipulator model.

The base frame is centred on ``A1`` with the x-axis through ``A2``, so a
geometry is fully described by six numbers: ``A2x``, ``A3x``, ``A3y`` and the
platform sides ``d1 = |B1B2|``, ``d2 = |B2B3|``, ``d3 = |B3B1|``.  The interior
platform angle ``beta`` (at ``B1``) and the altitude ``h = d3 sin(beta)`` of
``B3`` above the side ``B1B2`` are always derived from the sides.

A platform pose is given by the vertex ``B1`` and the orientation ``alpha`` of
``B1B2``; ``B3`` sits at ``B1 + d3 (cos(alpha + beta), sin(alpha + beta))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Tuple

import numpy as np

GEOMETRY_KEYS = ("A2x", "A3x", "A3y", "d1", "d2", "d3")

Vec2 = Tuple[float, float]


class GeometryError(ValueError):
    """Invalid manipulator parameters (flat platform, bad base frame...)."""


class DegenerateConfigurationError(ValueError):
    """A leg of zero length, for which the leg angle is undefined."""


def wrap_angle(a: float) -> float:
    """Map an angle into (-pi, pi]."""
    w = math.remainder(a, 2.0 * math.pi)
    return math.pi if w <= -math.pi else w


def angle_distance(a: float, b: float) -> float:
    """Wrap-aware absolute angular distance, in [0, pi]."""
    return abs(math.remainder(a - b, 2.0 * math.pi))


def exact_decimal(x) -> Fraction:
    """Exact rational value of a number as it was written in decimal.

    Floats are read back through ``repr`` (the shortest round-tripping decimal),
    so ``15.91`` becomes ``1591/100`` rather than the binary approximation.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(repr(float(x)))


FLAT_TOL = 1e-12


def derive_platform_angle(d1: float, d2: float, d3: float, allow_flat: bool = False) -> Tuple[float, float]:
    """Platform angle at B1 and altitude of B3 over B1B2 from the three sides.

    A flat (collinear) platform is an error unless ``allow_flat``; it then
    gets ``beta`` exactly 0 or pi and ``h = 0``.
    """
    if min(d1, d2, d3) <= 0:
        raise GeometryError("platform sides must be positive")
    cb = (d1 * d1 + d3 * d3 - d2 * d2) / (2.0 * d1 * d3)
    if abs(cb) >= 1.0 - FLAT_TOL:
        if not allow_flat or abs(cb) > 1.0 + 1e-9:
            raise GeometryError(f"degenerate (flat) platform triangle: cos(beta) = {cb!r}")
        return (0.0 if cb > 0 else math.pi), 0.0
    beta = math.acos(cb)
    return beta, d3 * math.sin(beta)


@dataclass(frozen=True)
class ManipulatorGeometry:
    A2x: float
    A3x: float
    A3y: float
    d1: float
    d2: float
    d3: float
    allow_flat: bool = field(default=False, kw_only=True)

    def __post_init__(self):
        for k in GEOMETRY_KEYS:
            v = getattr(self, k)
            if not math.isfinite(v):
                raise GeometryError(f"{k} must be finite, got {v!r}")
        if self.A2x <= 0:
            raise GeometryError("A2x must be positive (x-axis passes through A2)")
        d1, d2, d3 = self.d1, self.d2, self.d3
        if min(d1, d2, d3) <= 0:
            raise GeometryError("platform sides must be positive")
        if not self.allow_flat and not (d1 < d2 + d3 and d2 < d1 + d3 and d3 < d1 + d2):
            raise GeometryError("platform sides violate the strict triangle inequality")
        derive_platform_angle(d1, d2, d3, self.allow_flat)

    @property
    def is_flat(self) -> bool:
        return self.exact_h_squared == 0

    @cached_property
    def beta(self) -> float:
        return derive_platform_angle(self.d1, self.d2, self.d3, self.allow_flat)[0]

    @cached_property
    def h(self) -> float:
        return derive_platform_angle(self.d1, self.d2, self.d3, self.allow_flat)[1]

    @property
    def anchors(self) -> Tuple[Vec2, Vec2, Vec2]:
        return (0.0, 0.0), (self.A2x, 0.0), (self.A3x, self.A3y)

    @property
    def length_scale(self) -> float:
        return max(self.A2x, abs(self.A3x), abs(self.A3y), self.d1, self.d2, self.d3)

    @cached_property
    def tol_constraint(self) -> float:
        return 1e-8 * max(self.d1, self.d2, self.d3) ** 2

    @cached_property
    def exact(self) -> dict:
        """The six parameters as exact rationals (decimal reading)."""
        return {k: exact_decimal(getattr(self, k)) for k in GEOMETRY_KEYS}

    @cached_property
    def exact_cos_beta(self) -> Fraction:
        e = self.exact
        cb = (e["d1"] ** 2 + e["d3"] ** 2 - e["d2"] ** 2) / (2 * e["d1"] * e["d3"])
        if self.allow_flat and abs(float(cb)) >= 1.0 - FLAT_TOL:
            return Fraction(1 if cb > 0 else -1)
        return cb

    @cached_property
    def exact_h_squared(self) -> Fraction:
        """h**2 as an exact rational; h itself is generally irrational."""
        d3 = self.exact["d3"]
        return d3 * d3 * (1 - self.exact_cos_beta ** 2)

    def scaled(self, k: float) -> "ManipulatorGeometry":
        return ManipulatorGeometry(*(k * getattr(self, n) for n in GEOMETRY_KEYS), allow_flat=self.allow_flat)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in GEOMETRY_KEYS}

    @classmethod
    def from_dict(cls, data: dict, allow_flat: bool = False) -> "ManipulatorGeometry":
        keys = set(data)
        if keys != set(GEOMETRY_KEYS):
            missing = sorted(set(GEOMETRY_KEYS) - keys)
            extra = sorted(keys - set(GEOMETRY_KEYS))
            raise GeometryError(f"geometry keys mismatch (missing={missing}, unexpected={extra})")
        vals = {}
        for k in GEOMETRY_KEYS:
            v = data[k]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise GeometryError(f"{k} must be a number, got {v!r}")
            vals[k] = float(v)
        return cls(**vals, allow_flat=allow_flat)

    @classmethod
    def from_json(cls, path, allow_flat: bool = False) -> "ManipulatorGeometry":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise GeometryError(f"invalid geometry JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise GeometryError("geometry JSON must be an object")
        return cls.from_dict(data, allow_flat)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")


def reference_geometry() -> ManipulatorGeometry:
    """The benchmark manipulator used throughout the literature on cuspidal 3-RPR robots."""
    return ManipulatorGeometry(A2x=15.91, A3x=0.0, A3y=10.0, d1=17.04, d2=16.54, d3=20.84)


def second_geometry() -> ManipulatorGeometry:
    """Small manipulator whose slice pattern is constant above rho1 = 5.

    Its sides satisfy d1 = d2 + d3: the platform is a segment with B3 between
    B1 and B2.
    """
    return ManipulatorGeometry(A2x=3.0, A3x=1.1, A3y=2.7, d1=1.3, d2=0.9, d3=0.4, allow_flat=True)


@dataclass(frozen=True)
class Configuration:
    L: Tuple[float, float, float]
    theta: Tuple[float, float, float]

    def residuals(self, geom: ManipulatorGeometry) -> Tuple[float, float, float]:
        return constraint_residuals(geom, self)

    def is_consistent(self, geom: ManipulatorGeometry, tol: float | None = None) -> bool:
        tol = geom.tol_constraint if tol is None else tol
        return max(abs(g) for g in self.residuals(geom)) <= tol


@dataclass(frozen=True)
class PlatformPose:
    b1: Vec2
    alpha: float


@dataclass(frozen=True)
class SliceCoords:
    rho1: float
    alpha: float
    theta1: float


def platform_points(geom: ManipulatorGeometry, config: Configuration):
    r1, r2, r3 = config.L
    t1, t2, t3 = config.theta
    b1 = (r1 * math.cos(t1), r1 * math.sin(t1))
    b2 = (geom.A2x + r2 * math.cos(t2), r2 * math.sin(t2))
    b3 = (geom.A3x + r3 * math.cos(t3), geom.A3y + r3 * math.sin(t3))
    return b1, b2, b3


def _sq(ax, ay, bx, by):
    return (bx - ax) ** 2 + (by - ay) ** 2


def constraint_residuals(geom: ManipulatorGeometry, config: Configuration):
    """Squared-distance defects of the three platform sides."""
    b1, b2, b3 = platform_points(geom, config)
    return (
        _sq(*b1, *b2) - geom.d1 ** 2,
        _sq(*b2, *b3) - geom.d2 ** 2,
        _sq(*b3, *b1) - geom.d3 ** 2,
    )


def pose_vertices(geom: ManipulatorGeometry, pose: PlatformPose):
    x, y = pose.b1
    a = pose.alpha
    b2 = (x + geom.d1 * math.cos(a), y + geom.d1 * math.sin(a))
    b3 = (x + geom.d3 * math.cos(a + geom.beta), y + geom.d3 * math.sin(a + geom.beta))
    return (x, y), b2, b3


def inverse_kinematics(geom: ManipulatorGeometry, pose: PlatformPose) -> Configuration:
    L, th = [], []
    for i, (a, b) in enumerate(zip(geom.anchors, pose_vertices(geom, pose))):
        dx, dy = b[0] - a[0], b[1] - a[1]
        r = math.hypot(dx, dy)
        if r <= 1e-14 * geom.length_scale:
            raise DegenerateConfigurationError(f"vertex B{i + 1} coincides with anchor A{i + 1}")
        L.append(r)
        th.append(math.atan2(dy, dx))
    return Configuration(tuple(L), tuple(th))


def slice_vectors(geom: ManipulatorGeometry, rho1, alpha, theta1):
    """Leg vectors B2 - A2 and B3 - A3 for slice coordinates; numpy-broadcastable."""
    c1, s1 = np.cos(theta1), np.sin(theta1)
    X2 = -geom.A2x + rho1 * c1 + geom.d1 * np.cos(alpha)
    Y2 = rho1 * s1 + geom.d1 * np.sin(alpha)
    X3 = -geom.A3x + rho1 * c1 + geom.d3 * np.cos(alpha + geom.beta)
    Y3 = -geom.A3y + rho1 * s1 + geom.d3 * np.sin(alpha + geom.beta)
    return X2, Y2, X3, Y3


def slice_to_joint(geom: ManipulatorGeometry, rho1, alpha, theta1):
    """(rho2, rho3) of slice coordinates; numpy-broadcastable."""
    X2, Y2, X3, Y3 = slice_vectors(geom, rho1, alpha, theta1)
    return np.hypot(X2, Y2), np.hypot(X3, Y3)


def config_from_slice(geom: ManipulatorGeometry, sl: SliceCoords) -> Configuration:
    X2, Y2, X3, Y3 = (float(v) for v in slice_vectors(geom, sl.rho1, sl.alpha, sl.theta1))
    r2, r3 = math.hypot(X2, Y2), math.hypot(X3, Y3)
    if min(r2, r3) <= 1e-14 * geom.length_scale:
        raise DegenerateConfigurationError("rho2 or rho3 vanishes; leg angle undefined")
    return Configuration(
        (sl.rho1, r2, r3),
        (wrap_angle(sl.theta1), math.atan2(Y2, X2), math.atan2(Y3, X3)),
    )


def pose_from_slice(sl: SliceCoords) -> PlatformPose:
    return PlatformPose((sl.rho1 * math.cos(sl.theta1), sl.rho1 * math.sin(sl.theta1)), wrap_angle(sl.alpha))


def slice_from_config(geom: ManipulatorGeometry, config: Configuration) -> SliceCoords:
    """Recover (rho1, alpha, theta1) from a consistent configuration."""
    b1, b2, _ = platform_points(geom, config)
    alpha = math.atan2(b2[1] - b1[1], b2[0] - b1[0])
    return SliceCoords(config.L[0], alpha, wrap_angle(config.theta[0]))


def pose_from_config(geom: ManipulatorGeometry, config: Configuration) -> PlatformPose:
    b1, b2, _ = platform_points(geom, config)
    return PlatformPose(b1, math.atan2(b2[1] - b1[1], b2[0] - b1[0]))
