"""Numerical verification of almost paracontact Finsler structures on vector bundles.

Structures are given by component expressions in adapted frames of a chart of
the total space; every identity is checked as a residual at sampled points.
"""
from .bundle import Chart, NonlinearConnection, Sample, VecField, bracket, spanning_fields
from .calculus import classify, normality_tensors
from .connection import canonical_connection
from .curvature import point_geometry, theorem_suite
from .dtensor import Metric, OneForm
from .expr import parse, simplify
from .residual import Report, Residual
from .structure import PacStructure

__version__ = "0.1.0"

__all__ = [
    "Chart", "NonlinearConnection", "Sample", "VecField", "bracket", "spanning_fields",
    "classify", "normality_tensors", "canonical_connection", "point_geometry", "theorem_suite",
    "Metric", "OneForm", "parse", "simplify", "Report", "Residual", "PacStructure",
]
