"""
Rendering
---------
Description: Static SVG views of placements
"""

from .code import render_svg

__all__ = ['render_svg']
