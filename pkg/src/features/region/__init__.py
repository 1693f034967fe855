"""
Region
------
Description: Windows, local segments and local cells around a target
"""

from .code import LocalRegion, RowIndex, Window, build_window, expand_window, extract_local_region

__all__ = ['LocalRegion', 'RowIndex', 'Window', 'build_window', 'expand_window', 'extract_local_region']
