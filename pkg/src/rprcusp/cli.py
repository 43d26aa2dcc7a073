"""Command-line entry point.

Exit codes: 0 success, 2 usage or invalid input, 3 numeric failure.
Every command reads the manipulator from one JSON geometry file (or the
built-in reference manipulator when ``--geometry`` is omitted).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import mpmath
import numpy as np

from . import cusp as cusp_mod
from . import surface as surface_mod
from .differential import RankDeficientError
from .geometry import (
    GeometryError,
    ManipulatorGeometry,
    PlatformPose,
    inverse_kinematics,
    reference_geometry,
    second_geometry,
)
from .kinematics import direct_kinematics
from .polyalg import DegreeCapError
from .singular_slice import label_regions, trace_slice_curves, write_regions_csv, write_slice_csv, write_slice_svg

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
PRESETS = {"reference": reference_geometry, "second": second_geometry}


class InputError(ValueError):
    """Bad command-line values or files."""


def _positive_float(s: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not (math.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"must be a positive finite number: {s!r}")
    return x


def _finite_float(s: str) -> float:
    try:
        x = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"must be finite: {s!r}")
    return x


def _nonneg_float(s: str) -> float:
    x = _finite_float(s)
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {s!r}")
    return x


def _positive_int(s: str) -> int:
    try:
        n = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer: {s!r}")
    return n


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rprcusp", description="Singularity and cusp analysis of planar 3-RPR manipulators.")
    p.add_argument("--geometry", help="geometry JSON file (default: built-in reference manipulator)")
    p.add_argument("--allow-flat", action="store_true", help="accept a platform whose vertices are collinear")
    p.add_argument(
        "--digits", type=_positive_int, default=cusp_mod.DEFAULT_DIGITS, help="working precision in decimal digits"
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("geometry", help="write a built-in geometry as JSON")
    g.add_argument("--preset", choices=sorted(PRESETS), default="reference")
    g.add_argument("--out", help="output path (default: standard output)")

    s = sub.add_parser("slice", help="trace the singular curves of one slice")
    s.add_argument("--rho1", type=_positive_float, required=True)
    s.add_argument("--resolution", type=_positive_int, default=1024)
    s.add_argument("--out", required=True, help="slice CSV path")
    s.add_argument("--svg", help="optional SVG plot path")
    s.add_argument("--mark-cusps", action="store_true", help="also compute cusps and circle them on the SVG")

    c = sub.add_parser("cusps", help="cusp points of one slice")
    c.add_argument("--rho1", type=_positive_float, required=True)
    c.add_argument("--mode", choices=cusp_mod.MODES, default="algebraic")
    c.add_argument("--out", help="cusp JSON path (default: standard output)")
    c.add_argument("--tol-e1", type=_positive_float, default=cusp_mod.TOL_E1)
    c.add_argument("--eps-cluster", type=_positive_float)
    c.add_argument("--resolution", type=_positive_int, default=4096, help="tracing resolution of numeric mode")

    d = sub.add_parser("dk", help="direct kinematics")
    d.add_argument("--lengths", type=_nonneg_float, nargs=3, required=True, metavar=("R1", "R2", "R3"))
    d.add_argument("--mode", choices=("float", "mp"), default="float")
    d.add_argument("--eps-cluster", type=_positive_float)

    i = sub.add_parser("ik", help="inverse kinematics")
    i.add_argument("--pose", type=_finite_float, nargs=3, required=True, metavar=("X", "Y", "ALPHA_DEG"))

    r = sub.add_parser("regions", help="assembly-mode count over a (rho2, rho3) grid")
    r.add_argument("--rho1", type=_positive_float, required=True)
    r.add_argument("--grid", type=_positive_int, default=60)
    r.add_argument("--bounds", type=_nonneg_float, nargs=4, metavar=("RHO2_MIN", "RHO2_MAX", "RHO3_MIN", "RHO3_MAX"))
    r.add_argument("--resolution", type=_positive_int, default=512)
    r.add_argument("--out", required=True, help="regions CSV path")

    f = sub.add_parser("surface", help="sweep rho1 and export the singularity surface")
    f.add_argument("--rho1-range", type=_positive_float, nargs=2, required=True, metavar=("A", "B"))
    f.add_argument("--steps", type=_positive_int, required=True)
    f.add_argument("--mode", choices=cusp_mod.MODES, default="algebraic")
    f.add_argument("--resolution", type=_positive_int, default=1024)
    f.add_argument("--format", default="obj", help="mesh format (obj)")
    f.add_argument("--out", required=True, help="mesh path")
    f.add_argument("--summary", help="summary CSV path (default: mesh path with .csv suffix)")
    return p


def load_geometry(args) -> ManipulatorGeometry:
    if args.geometry is None:
        return reference_geometry()
    path = Path(args.geometry)
    if not path.is_file():
        raise InputError(f"geometry file not found: {path}")
    return ManipulatorGeometry.from_json(path, allow_flat=args.allow_flat)


def _dump(doc, path: Optional[str], out) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path is None:
        out.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def cmd_geometry(args, out) -> int:
    geom = PRESETS[args.preset]()
    _dump(geom.to_dict(), args.out, out)
    return EXIT_OK


def cmd_slice(args, out) -> int:
    geom = load_geometry(args)
    curves = trace_slice_curves(geom, args.rho1, args.resolution)
    write_slice_csv(curves, args.out)
    if args.svg:
        marks = cusp_mod.find_cusps(geom, args.rho1, digits=args.digits)[0] if args.mark_cusps else ()
        write_slice_svg(curves, args.svg, marks)
    out.write(f"branches {len(curves.branches)} vertices {curves.vertex_count}\n")
    return EXIT_OK


def cmd_cusps(args, out) -> int:
    geom = load_geometry(args)
    cusps, trace = cusp_mod.find_cusps(
        geom,
        args.rho1,
        mode=args.mode,
        digits=args.digits,
        tol_E1=args.tol_e1,
        eps_cluster=args.eps_cluster,
        resolution=args.resolution,
    )
    text = cusp_mod.cusps_to_json(cusps, trace)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    out.write(f"{len(cusps)}\n")
    return EXIT_OK


def cmd_dk(args, out) -> int:
    geom = load_geometry(args)
    sol = direct_kinematics(geom, args.lengths, mode=args.mode, digits=args.digits, eps_cluster=args.eps_cluster)
    doc = {
        "lengths": list(sol.lengths),
        "poses": [
            {
                "x": p.pose.b1[0],
                "y": p.pose.b1[1],
                "alpha_deg": math.degrees(p.alpha),
                "theta1_deg": math.degrees(p.theta1),
                "residual": p.residual,
            }
            for p in sol.poses
        ],
        "clusters": [
            {
                "members": list(c.members),
                "multiplicity": c.multiplicity,
                "root_multiplicity": c.root_multiplicity,
                "gap": c.gap,
            }
            for c in sol.clusters
        ],
        "eps_cluster": sol.eps_cluster,
    }
    _dump(doc, None, out)
    return EXIT_OK


def cmd_ik(args, out) -> int:
    geom = load_geometry(args)
    x, y, a = args.pose
    cfg = inverse_kinematics(geom, PlatformPose((x, y), math.radians(a)))
    _dump({"L": list(cfg.L), "theta_deg": [math.degrees(t) for t in cfg.theta]}, None, out)
    return EXIT_OK


def cmd_regions(args, out) -> int:
    geom = load_geometry(args)
    bounds = tuple(args.bounds) if args.bounds else None
    curves = None if bounds else trace_slice_curves(geom, args.rho1, args.resolution)
    reg = label_regions(geom, args.rho1, args.grid, bounds, curves)
    write_regions_csv(reg, args.out)
    out.write("counts " + " ".join(str(c) for c in sorted(set(int(v) for v in np.unique(reg.counts)))) + "\n")
    return EXIT_OK


def cmd_surface(args, out) -> int:
    geom = load_geometry(args)
    a, b = args.rho1_range
    if args.format not in surface_mod.MESH_FORMATS:
        raise InputError(f"unsupported mesh format {args.format!r}")
    sw = surface_mod.sweep(geom, a, b, args.steps, cusp_mode=args.mode, resolution=args.resolution)
    stats = surface_mod.export_mesh(sw, args.out, args.format)
    summary = args.summary or str(Path(args.out).with_suffix(".csv"))
    surface_mod.write_summary_csv(sw, summary)
    thr = sw.stabilization_threshold
    out.write(f"vertices {stats.vertices} lines {stats.lines} faces {stats.faces}\n")
    out.write(f"stabilization {'none' if thr is None else format(thr, 'g')}\n")
    return EXIT_OK


COMMANDS = {
    "geometry": cmd_geometry,
    "slice": cmd_slice,
    "cusps": cmd_cusps,
    "dk": cmd_dk,
    "ik": cmd_ik,
    "regions": cmd_regions,
    "surface": cmd_surface,
}


def main(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except InputError as exc:
        err.write(f"{exc}\n")
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except (DegreeCapError, RankDeficientError, ArithmeticError, np.linalg.LinAlgError, mpmath.libmp.NoConvergence) as exc:
        err.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except (InputError, GeometryError, ValueError, OSError) as exc:
        err.write(f"invalid input: {exc}\n")
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
