"""navgeo: geometry of navigation data (metric + bounded wind).

The package evaluates the induced Randers-type norm, its nonlinear parallel
transport and connection, geodesic sprays, holonomy diagnostics, and the
standard special-wind classifications, on expression-defined fields over a
single coordinate chart.
"""
from .errors import NavGeoError

__all__ = ["NavGeoError"]
__version__ = "0.1.0"
