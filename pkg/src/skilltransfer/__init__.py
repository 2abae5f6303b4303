"""Skill-library planning, grid motion planning and tactile perception."""

__version__ = "0.1.0"
