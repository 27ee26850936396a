"""g2kit: numerical toolkit for G2-structures on 7-manifolds."""

__version__ = "0.1.0"
