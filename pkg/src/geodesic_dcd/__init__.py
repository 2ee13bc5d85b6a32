"""geodesic-dcd: dynamic community detection with Grassmann geodesics."""

__version__ = "0.1.0"
