"""Singularity curves, cusp points and assembly modes of planar 3-RPR manipulators."""

from __future__ import annotations

from .cusp import CuspPoint, EliminationTrace, find_cusps, find_cusps_numeric
from .geometry import (
    Configuration,
    GeometryError,
    ManipulatorGeometry,
    PlatformPose,
    SliceCoords,
    inverse_kinematics,
    reference_geometry,
    second_geometry,
)
from .kinematics import DKSolutionSet, count_assembly_modes, direct_kinematics
from .singular_slice import RegionMap, SingularCurveSet, label_regions, trace_slice_curves
from .surface import SurfaceSweep, export_mesh, sweep

__all__ = [
    "Configuration",
    "CuspPoint",
    "DKSolutionSet",
    "EliminationTrace",
    "GeometryError",
    "ManipulatorGeometry",
    "PlatformPose",
    "RegionMap",
    "SingularCurveSet",
    "SliceCoords",
    "SurfaceSweep",
    "count_assembly_modes",
    "direct_kinematics",
    "export_mesh",
    "find_cusps",
    "find_cusps_numeric",
    "inverse_kinematics",
    "label_regions",
    "reference_geometry",
    "second_geometry",
    "sweep",
    "trace_slice_curves",
]

__version__ = "0.1.0"
