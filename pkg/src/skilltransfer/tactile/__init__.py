from .contours import (ContourSet, GradientField, PerceptionConfig, PerceptionError, contour_rmse,
                       extract_contours, gaussian_kernel, gaussian_smooth, gradient_field, hysteresis,
                       nonmax_suppress, texture_threshold)
from .hough import Line, LineSet, hough_lines
from .pose import pose_error, pose_from_lines, world_pose
from .synth import SHAPES, Ridge, ShapePose, Stripes, blank_image, edge_pose, synth_tactile_image

__all__ = [
    "ContourSet", "GradientField", "PerceptionConfig", "PerceptionError", "contour_rmse",
    "extract_contours", "gaussian_kernel", "gaussian_smooth", "gradient_field", "hysteresis",
    "nonmax_suppress", "texture_threshold", "Line", "LineSet", "hough_lines", "pose_error",
    "pose_from_lines", "world_pose", "SHAPES", "Ridge", "ShapePose", "Stripes", "blank_image",
    "edge_pose", "synth_tactile_image",
]
