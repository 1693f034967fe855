"""
Ingest
------
Description: Placement file format, synthetic instances and run reports
"""

from .code import parse_placement, write_placement

__all__ = ['parse_placement', 'write_placement']
