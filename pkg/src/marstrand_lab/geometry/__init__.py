from .core import (
    GeodesicFrame,
    GeometryCalibration,
    ParamGeodesic,
    angle_at,
    calibrate_bilipschitz,
    curvature_at,
    exp_map,
    frame,
    geodesic_point,
    log_map,
    project_param,
    segment_point,
)
from .golden import bracket_minimum, golden_section

__all__ = [
    "GeodesicFrame",
    "GeometryCalibration",
    "ParamGeodesic",
    "angle_at",
    "bracket_minimum",
    "calibrate_bilipschitz",
    "curvature_at",
    "exp_map",
    "frame",
    "geodesic_point",
    "golden_section",
    "log_map",
    "project_param",
    "segment_point",
]
