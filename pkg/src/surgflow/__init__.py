"""Mean curvature flow with free boundary and neck surgery in convex domains."""

__version__ = "0.1.0"

from .domain import Ball, Ellipsoid, make_domain  # noqa: F401
