"""Numerical evidence for topological triviality of families f + t g.

Modules: ``poly_core`` (sparse polynomials), ``conditions`` (pointwise
inequality ratios), ``arcs`` (arc sampling and order estimates), ``fields``
and ``flow`` (tangent fields and their flows), ``infinity`` (behaviour at
infinity) and ``cli``.
"""
__version__ = "0.1.0"
