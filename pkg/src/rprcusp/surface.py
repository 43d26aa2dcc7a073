"""Sweeps of the first leg length and the joint-space singularity surface.

Each sample traces the singular curves of one slice and counts its cusps.
Slices are independent, so they can run in worker processes; results are
merged back in ``rho1`` order, which keeps every output deterministic.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cusp import CuspPoint, find_cusps
from .geometry import ManipulatorGeometry
from .singular_slice import Branch, SingularCurveSet, trace_slice_curves

STABLE_RUN = 5
MESH_FORMATS = ("obj",)
THREADS_ENV = "RPRCUSP_THREADS"


class UnsupportedFormatError(ValueError):
    """Requested mesh format is not one of :data:`MESH_FORMATS`."""


@dataclass(frozen=True)
class SurfaceSweep:
    rho1_samples: Tuple[float, ...]
    curves: Tuple[SingularCurveSet, ...]
    cusps: Tuple[Tuple[CuspPoint, ...], ...]
    stabilization_threshold: Optional[float]

    def __post_init__(self):
        s = self.rho1_samples
        if any(b <= a for a, b in zip(s, s[1:])):
            raise ValueError("rho1 samples must be strictly increasing")
        if not (len(s) == len(self.curves) == len(self.cusps)):
            raise ValueError("one curve set and one cusp list per sample")

    @property
    def cusp_counts(self) -> Tuple[int, ...]:
        return tuple(len(c) for c in self.cusps)

    @property
    def spacing(self) -> float:
        s = self.rho1_samples
        return (s[-1] - s[0]) / (len(s) - 1) if len(s) > 1 else 0.0

    def transitions(self) -> List[Tuple[float, float, int, int]]:
        """Brackets ``(rho1_lo, rho1_hi, count_lo, count_hi)`` where the cusp count changes."""
        c, s = self.cusp_counts, self.rho1_samples
        return [(s[i], s[i + 1], c[i], c[i + 1]) for i in range(len(s) - 1) if c[i] != c[i + 1]]


def stabilization_threshold(samples: Sequence[float], counts: Sequence[int], run: int = STABLE_RUN) -> Optional[float]:
    """Smallest sample after which the count stays constant to the end.

    ``None`` unless the final constant run has at least ``run`` samples.
    """
    if not counts:
        return None
    i = len(counts) - 1
    while i > 0 and counts[i - 1] == counts[-1]:
        i -= 1
    return float(samples[i]) if len(counts) - i >= run else None


def sample_grid(rho1_min: float, rho1_max: float, steps: int) -> List[float]:
    """Evenly spaced samples, rounded to 12 significant digits.

    Rounding keeps the exact decimal reading of each sample short, which keeps
    the rational elimination cheap.
    """
    if steps == 1:
        return [float(f"{rho1_min:.12g}")]
    return [float(f"{x:.12g}") for x in np.linspace(rho1_min, rho1_max, steps)]


def _default_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer")
    return n


def _slice_job(args):
    geom, rho1, cusp_mode, resolution = args
    curves = trace_slice_curves(geom, rho1, resolution)
    cusps, _ = find_cusps(geom, rho1, mode=cusp_mode)
    return curves, tuple(cusps)


def sweep_values(
    geom: ManipulatorGeometry,
    rho1_values: Sequence[float],
    cusp_mode: str = "algebraic",
    resolution: int = 1024,
    workers: Optional[int] = None,
) -> SurfaceSweep:
    """Sweep an explicit ascending list of ``rho1`` values."""
    values = [float(r) for r in rho1_values]
    if not values or any(r <= 0 for r in values):
        raise ValueError("rho1 samples must be positive and nonempty")
    workers = _default_workers() if workers is None else workers
    jobs = [(geom, r, cusp_mode, resolution) for r in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_slice_job, jobs))
    else:
        results = [_slice_job(j) for j in jobs]
    curves = tuple(r[0] for r in results)
    cusps = tuple(r[1] for r in results)
    thr = stabilization_threshold(values, [len(c) for c in cusps])
    return SurfaceSweep(tuple(values), curves, cusps, thr)


def sweep(
    geom: ManipulatorGeometry,
    rho1_min: float,
    rho1_max: float,
    steps: int,
    cusp_mode: str = "algebraic",
    resolution: int = 1024,
    workers: Optional[int] = None,
) -> SurfaceSweep:
    """Sweep ``steps`` evenly spaced slices over ``[rho1_min, rho1_max]``.

    ``steps == 1`` gives the single slice ``rho1_min``.
    """
    if not (rho1_min > 0 and math.isfinite(rho1_max)):
        raise ValueError("rho1 range must be positive and finite")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps > 1 and not rho1_min < rho1_max:
        raise ValueError("rho1_min must be below rho1_max")
    return sweep_values(geom, sample_grid(rho1_min, rho1_max, steps), cusp_mode, resolution, workers)


# ---------------------------------------------------------------------------
# mesh export


def _num(x: float) -> str:
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


def _points(rho1: float, b: Branch) -> np.ndarray:
    return np.column_stack([np.full(len(b), rho1), b.rho2, b.rho3])


def _to_polyline(P: np.ndarray, Q: np.ndarray, closed: bool) -> np.ndarray:
    """Distance from each point of ``P`` to the polyline ``Q``."""
    if len(Q) == 1:
        return np.linalg.norm(P - Q[0], axis=1)
    S = np.vstack([Q, Q[:1]]) if closed else Q
    a, b = S[:-1], S[1:]
    ab = b - a
    L2 = np.maximum((ab * ab).sum(axis=1), 1e-300)
    t = np.clip(((P[:, None, :] - a[None]) * ab[None]).sum(axis=2) / L2, 0.0, 1.0)
    foot = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(P[:, None, :] - foot, axis=2).min(axis=1)


def _hausdorff(P: np.ndarray, Q: np.ndarray, closed_p: bool = False, closed_q: bool = False) -> float:
    """Hausdorff distance between two polylines in the slice plane ``(rho2, rho3)``."""
    P2, Q2 = P[:, 1:], Q[:, 1:]
    return float(max(_to_polyline(P2, Q2, closed_q).max(), _to_polyline(Q2, P2, closed_p).max()))


def match_branches(A, B, threshold: float) -> List[Tuple[int, int]]:
    """One-to-one Hausdorff-nearest pairs below ``threshold``.

    ``A`` and ``B`` hold ``(points, closed)`` per branch.  A pair is kept only
    if each branch is the other's nearest; anything else counts as a
    topology change and is left unmatched.
    """
    if not A or not B:
        return []
    H = np.array([[_hausdorff(a, b, ca, cb) for b, cb in B] for a, ca in A])
    pairs = []
    for i in range(len(A)):
        j = int(np.argmin(H[i]))
        if int(np.argmin(H[:, j])) == i and H[i, j] <= threshold:
            pairs.append((i, j))
    return pairs


def _align(a: np.ndarray, b: np.ndarray, ia: np.ndarray, ib: np.ndarray, closed: bool):
    """Reorder ``b`` (with its vertex indices) to run alongside ``a``."""
    if closed:
        k = int(np.argmin(np.linalg.norm(b - a[0], axis=1)))
        b, ib = np.roll(b, -k, axis=0), np.roll(ib, -k)
        rb, rib = np.roll(b[::-1], 1, axis=0), np.roll(ib[::-1], 1)
        m = min(len(a), len(b))
        sa = np.linspace(0, len(a) - 1, m).astype(int)
        sb = np.linspace(0, len(b) - 1, m).astype(int)
        if np.linalg.norm(a[sa] - rb[sb], axis=1).sum() < np.linalg.norm(a[sa] - b[sb], axis=1).sum():
            b, ib = rb, rib
        return b, ib
    fwd = np.linalg.norm(a[0] - b[0]) + np.linalg.norm(a[-1] - b[-1])
    rev = np.linalg.norm(a[0] - b[-1]) + np.linalg.norm(a[-1] - b[0])
    return (b[::-1], ib[::-1]) if rev < fwd else (b, ib)


def stitch(a: np.ndarray, b: np.ndarray, ia: np.ndarray, ib: np.ndarray, closed: bool) -> List[Tuple[int, int, int]]:
    """Triangle strip between two aligned polylines, advancing along the shorter diagonal."""
    if closed:
        a, ia = np.vstack([a, a[:1]]), np.append(ia, ia[0])
        b, ib = np.vstack([b, b[:1]]), np.append(ib, ib[0])
    i = j = 0
    tris = []
    while i < len(a) - 1 or j < len(b) - 1:
        adv_a = j == len(b) - 1 or (
            i < len(a) - 1 and np.linalg.norm(a[i + 1] - b[j]) <= np.linalg.norm(a[i] - b[j + 1])
        )
        if adv_a:
            tris.append((int(ia[i]), int(ia[i + 1]), int(ib[j])))
            i += 1
        else:
            tris.append((int(ia[i]), int(ib[j + 1]), int(ib[j])))
            j += 1
    return tris


@dataclass(frozen=True)
class MeshStats:
    vertices: int
    lines: int
    faces: int
    matched_pairs: int
    unmatched_branches: int


def mesh_obj(sw: SurfaceSweep) -> Tuple[str, MeshStats]:
    """Text of the surface mesh and its element counts.

    Vertices are every traced slice vertex lifted to ``(rho1, rho2, rho3)``,
    in sweep order; each branch is an ``l`` record; adjacent slices with a
    one-to-one branch correspondence are joined by ``f`` triangles.
    """
    if not sw.rho1_samples:
        raise ValueError("sweep is empty")
    buf = io.StringIO()
    buf.write("# joint-space singularity surface: x = rho1, y = rho2, z = rho3\n")
    slices: List[List[Tuple[np.ndarray, np.ndarray, bool]]] = []
    base = 1
    for r, cs in zip(sw.rho1_samples, sw.curves):
        row = []
        for b in cs.branches:
            P = _points(r, b)
            for p in P:
                buf.write(f"v {_num(p[0])} {_num(p[1])} {_num(p[2])}\n")
            row.append((P, np.arange(base, base + len(P)), b.closed))
            base += len(P)
        slices.append(row)
    n_lines = 0
    for row in slices:
        for P, idx, closed in row:
            if len(idx) < 2:
                continue
            ids = list(idx) + ([idx[0]] if closed else [])
            buf.write("l " + " ".join(str(int(k)) for k in ids) + "\n")
            n_lines += 1
    n_faces = n_pairs = unmatched = 0
    threshold = 2.0 * sw.spacing
    for lo, hi in zip(slices, slices[1:]):
        pairs = match_branches([(p, c) for p, _, c in lo], [(p, c) for p, _, c in hi], threshold)
        unmatched += len(lo) + len(hi) - 2 * len(pairs)
        for i, j in pairs:
            (a, ia, ca), (b, ib, cb) = lo[i], hi[j]
            if ca != cb or len(a) < 2 or len(b) < 2:
                unmatched += 2
                continue
            b2, ib2 = _align(a, b, ia, ib, ca)
            for t in stitch(a, b2, ia, ib2, ca):
                buf.write(f"f {t[0]} {t[1]} {t[2]}\n")
                n_faces += 1
            n_pairs += 1
    return buf.getvalue(), MeshStats(base - 1, n_lines, n_faces, n_pairs, unmatched)


def export_mesh(sw: SurfaceSweep, path, fmt: str = "obj") -> MeshStats:
    if fmt not in MESH_FORMATS:
        raise UnsupportedFormatError(f"unsupported mesh format {fmt!r}; supported: {', '.join(MESH_FORMATS)}")
    text, stats = mesh_obj(sw)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return stats


def summary_csv(sw: SurfaceSweep) -> str:
    out = ["rho1,cusp_count,branch_count,vertex_count"]
    for r, cs, cu in zip(sw.rho1_samples, sw.curves, sw.cusps):
        out.append(f"{_num(r)},{len(cu)},{len(cs.branches)},{cs.vertex_count}")
    return "\n".join(out) + "\n"


def write_summary_csv(sw: SurfaceSweep, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(summary_csv(sw))
