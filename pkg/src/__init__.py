"""
MGL Legalizer - mixed-cell-height standard cell legalization.
"""

__version__ = "0.1.0"
