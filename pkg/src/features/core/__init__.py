"""
Core
----
Description: Site grid, cells, placements, legality checks and displacement metrics
"""

from .code import Cell, Placement, Rail, SiteGrid, average_displacement, check_legal
from .errors import LegalizerError

__all__ = ['Cell', 'Placement', 'Rail', 'SiteGrid', 'average_displacement', 'check_legal', 'LegalizerError']
